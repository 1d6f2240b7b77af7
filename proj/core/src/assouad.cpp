#include "exrisk/assouad.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "exrisk/csv.hpp"
#include "exrisk/rng.hpp"

namespace exrisk {

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        v *= hi[i] - lo[i];
    }
    return v;
}

bool Box::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) {
            return false;
        }
    }
    return true;
}

Box AssouadParams::default_residual_region(int d) {
    Box box;
    box.lo.assign(static_cast<std::size_t>(d), 2.0);
    box.hi.assign(static_cast<std::size_t>(d), 3.0);
    return box;
}

double AssouadParams::bump_amplitude() const {
    return std::pow(static_cast<double>(q), -r);
}

double AssouadParams::ball_radius() const {
    return 1.0 / (4.0 * static_cast<double>(q));
}

std::size_t AssouadParams::ones_count() const {
    std::size_t ones = 0;
    for (auto bit : sigma) {
        ones += bit;
    }
    return ones;
}

bool AssouadParams::margin_admissible() const {
    // relative slack admits the canonical boundary choice m w = (q^-r/2)^a
    return static_cast<double>(m) * w <=
           std::pow(bump_amplitude() / 2.0, alpha) * (1.0 + 1e-12);
}

void AssouadParams::validate() const {
    if (d < 1 || q < 1) {
        throw std::invalid_argument("AssouadParams: d and q must be >= 1");
    }
    if (r <= 0.0 || alpha < 0.0) {
        throw std::invalid_argument("AssouadParams: need r > 0 and alpha >= 0");
    }
    double cells = std::pow(static_cast<double>(q), d);
    if (static_cast<double>(m) > cells || m < 1) {
        throw std::invalid_argument("AssouadParams: need 1 <= m <= q^d");
    }
    if (!(w > 0.0) || w >= 1.0 / static_cast<double>(m)) {
        throw std::invalid_argument("AssouadParams: need 0 < w < 1/m");
    }
    if (!margin_admissible()) {
        throw std::invalid_argument("AssouadParams: margin admissibility m w <= (q^-r/2)^a fails");
    }
    if (sigma.size() != m) {
        throw std::invalid_argument("AssouadParams: sigma length must equal m");
    }
    for (auto bit : sigma) {
        if (bit > 1) {
            throw std::invalid_argument("AssouadParams: sigma entries must be 0 or 1");
        }
    }
    if (residual_region.lo.size() != static_cast<std::size_t>(d) ||
        residual_region.hi.size() != static_cast<std::size_t>(d)) {
        throw std::invalid_argument("AssouadParams: residual region dimension mismatch");
    }
    for (int i = 0; i < d; ++i) {
        if (!(residual_region.hi[i] > residual_region.lo[i])) {
            throw std::invalid_argument("AssouadParams: residual region must have positive volume");
        }
    }
    // Disjoint from [0,1]^d: some axis interval must not overlap [0,1].
    bool disjoint = false;
    for (int i = 0; i < d; ++i) {
        if (residual_region.lo[i] > 1.0 || residual_region.hi[i] < 0.0) {
            disjoint = true;
            break;
        }
    }
    if (!disjoint) {
        throw std::invalid_argument("AssouadParams: residual region overlaps [0,1]^d");
    }
}

double phi_bump(std::span<const double> x, double r, int q) {
    double norm_sq = 0.0;
    for (double xi : x) {
        norm_sq += xi * xi;
    }
    return std::pow(static_cast<double>(q), -r) * bump_h(std::sqrt(norm_sq));
}

std::vector<std::vector<double>> grid_points(int q, int d, std::size_t max_points) {
    if (q < 1 || d < 1) {
        throw std::invalid_argument("grid_points: q and d must be >= 1");
    }
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) {
        if (count > max_points / static_cast<std::size_t>(q)) {
            throw std::length_error("grid_points: q^d exceeds configured cap");
        }
        count *= static_cast<std::size_t>(q);
    }
    std::vector<std::vector<double>> points;
    points.reserve(count);
    std::vector<int> k(static_cast<std::size_t>(d), 0);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::vector<double> p(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            p[static_cast<std::size_t>(i)] =
                (2.0 * k[static_cast<std::size_t>(i)] + 1.0) / (2.0 * q);
        }
        points.push_back(std::move(p));
        // Advance (k_1,...,k_d) in dictionary order: last coordinate fastest.
        for (int i = d - 1; i >= 0; --i) {
            if (++k[static_cast<std::size_t>(i)] < q) {
                break;
            }
            k[static_cast<std::size_t>(i)] = 0;
        }
    }
    return points;
}

std::size_t cell_index(const AssouadParams& params, std::span<const double> x) {
    std::size_t rank = 0;
    for (int i = 0; i < params.d; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        if (xi < 0.0 || xi > 1.0) {
            return std::numeric_limits<std::size_t>::max();
        }
        int k = static_cast<int>(xi * params.q);
        k = std::min(k, params.q - 1);
        rank = rank * static_cast<std::size_t>(params.q) + static_cast<std::size_t>(k);
    }
    return rank;
}

namespace {

// Center of cell with dictionary rank i.
std::vector<double> cell_center(const AssouadParams& params, std::size_t rank) {
    std::vector<double> g(static_cast<std::size_t>(params.d));
    for (int i = params.d - 1; i >= 0; --i) {
        const std::size_t k = rank % static_cast<std::size_t>(params.q);
        rank /= static_cast<std::size_t>(params.q);
        g[static_cast<std::size_t>(i)] = (2.0 * static_cast<double>(k) + 1.0) / (2.0 * params.q);
    }
    return g;
}

}  // namespace

double eta_sigma(const AssouadParams& params, std::span<const double> x) {
    if (params.residual_region.contains(x)) {
        return 0.5;
    }
    const std::size_t idx = cell_index(params, x);
    if (idx == std::numeric_limits<std::size_t>::max() || idx >= params.m) {
        return 0.0;
    }
    if (params.sigma[idx] == 0) {
        return 0.5;
    }
    const std::vector<double> g = cell_center(params, idx);
    double norm_sq = 0.0;
    for (int i = 0; i < params.d; ++i) {
        const double diff = params.q * (x[static_cast<std::size_t>(i)] - g[static_cast<std::size_t>(i)]);
        norm_sq += diff * diff;
    }
    // 0.5 + amp * h / 2 rather than (1 + amp*h)/2 so the sigma=0 branch and
    // the plateau margin amp/2 come out exact.
    return 0.5 + 0.5 * params.bump_amplitude() * bump_h(std::sqrt(norm_sq));
}

namespace {

void sample_in_ball(Rng& rng, std::span<const double> center, double radius,
                    std::span<double> out) {
    const std::size_t d = center.size();
    if (d <= 10) {
        // Rejection from the bounding cube.
        for (;;) {
            double norm_sq = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                out[i] = rng.uniform(-radius, radius);
                norm_sq += out[i] * out[i];
            }
            if (norm_sq <= radius * radius) {
                break;
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            out[i] += center[i];
        }
    } else {
        // Gaussian direction, radius via inverse CDF.
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = rng.normal();
            norm_sq += out[i] * out[i];
        }
        const double norm = std::sqrt(norm_sq);
        const double rad = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = center[i] + rad * out[i] / norm;
        }
    }
}

}  // namespace

std::vector<LabeledSample> sample(const AssouadParams& params, std::size_t n, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);
    const double ball_mass = static_cast<double>(params.m) * params.w;
    const double radius = params.ball_radius();

    std::vector<std::vector<double>> centers;
    centers.reserve(params.m);
    for (std::size_t i = 0; i < params.m; ++i) {
        centers.push_back(cell_center(params, i));
    }

    std::vector<LabeledSample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        LabeledSample s;
        s.x.resize(static_cast<std::size_t>(params.d));
        const double u = rng.uniform01();
        if (u < ball_mass) {
            std::size_t i = static_cast<std::size_t>(u / params.w);
            i = std::min(i, params.m - 1);
            sample_in_ball(rng, centers[i], radius, s.x);
        } else {
            for (int i = 0; i < params.d; ++i) {
                s.x[static_cast<std::size_t>(i)] = rng.uniform(
                    params.residual_region.lo[static_cast<std::size_t>(i)],
                    params.residual_region.hi[static_cast<std::size_t>(i)]);
            }
        }
        s.eta_at_x = eta_sigma(params, s.x);
        s.y = rng.bernoulli(s.eta_at_x) ? 1 : 0;
        out.push_back(std::move(s));
    }
    return out;
}

double bayes_risk(const AssouadParams& params) {
    return 0.5 - 0.5 * params.w * params.bump_amplitude() *
                     static_cast<double>(params.ones_count());
}

double margin_cdf(const AssouadParams& params, double t) {
    if (t < 0.0) {
        throw std::domain_error("margin_cdf: t must be >= 0");
    }
    const double jump = params.bump_amplitude() / 2.0;
    if (t < jump) {
        return 0.0;
    }
    return static_cast<double>(params.ones_count()) * params.w;
}

double hellinger_sq(const AssouadParams& params, std::size_t flipped_index) {
    if (flipped_index >= params.m) {
        throw std::invalid_argument("hellinger_sq: flipped index out of range");
    }
    const double amp = params.bump_amplitude();
    return 2.0 * params.w * (1.0 - std::sqrt(1.0 - amp * amp));
}

double lower_bound_value(const AssouadParams& params, std::size_t n, double constant) {
    const double amp = params.bump_amplitude();
    const double mw = static_cast<double>(params.m) * params.w;
    return constant * amp * mw * (1.0 - amp * std::sqrt(static_cast<double>(n) * params.w));
}

RateParams assouad_rate_params(int d, double alpha, std::size_t n, double cbar) {
    if (d < 1 || alpha < 0.0 || n < 1 || cbar <= 0.0) {
        throw std::invalid_argument("assouad_rate_params: bad arguments");
    }
    RateParams out;
    const double r = 2.0 * d / (2.0 + alpha);
    out.q_unfloored = cbar * std::pow(static_cast<double>(n), 1.0 / (3.0 * r * (2.0 + alpha)));
    const int q = std::max(1, static_cast<int>(std::floor(out.q_unfloored)));

    AssouadParams& p = out.params;
    p.d = d;
    p.q = q;
    p.r = r;
    p.alpha = alpha;
    double cells = std::pow(static_cast<double>(q), d);
    p.m = static_cast<std::size_t>(cells);
    p.w = std::pow(static_cast<double>(q), -alpha * r - d) / std::pow(2.0, alpha);
    p.sigma.assign(p.m, 1);
    p.residual_region = AssouadParams::default_residual_region(d);
    return out;
}

AssouadParams parse_distribution_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("distribution config: expected key = value, got '" +
                                        std::string(view) + "'");
        }
        kv[std::string(trim(view.substr(0, eq)))] = std::string(trim(view.substr(eq + 1)));
    }
    auto require = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw std::invalid_argument(std::string("distribution config: missing key ") + key);
        }
        return it->second;
    };

    AssouadParams p;
    p.d = static_cast<int>(parse_int(require("d")));
    p.q = static_cast<int>(parse_int(require("q")));
    p.m = static_cast<std::size_t>(parse_int(require("m")));
    p.w = parse_double(require("w"));
    p.r = parse_double(require("r"));
    p.alpha = parse_double(require("alpha"));

    const std::string& bits = require("sigma");
    p.sigma.clear();
    for (char c : bits) {
        if (c == '0' || c == '1') {
            p.sigma.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c != ' ') {
            throw std::invalid_argument("distribution config: sigma must be a bit string");
        }
    }

    auto parse_vec = [](const std::string& text) {
        std::vector<double> v;
        for (const auto& tok : split(text, ' ')) {
            if (!trim(tok).empty()) {
                v.push_back(parse_double(trim(tok)));
            }
        }
        return v;
    };
    if (kv.count("region_lo") || kv.count("region_hi")) {
        p.residual_region.lo = parse_vec(require("region_lo"));
        p.residual_region.hi = parse_vec(require("region_hi"));
    } else {
        p.residual_region = AssouadParams::default_residual_region(p.d);
    }
    p.validate();
    return p;
}

AssouadParams parse_distribution_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open distribution config: " + path);
    }
    return parse_distribution_config(in);
}

void write_distribution_config(std::ostream& out, const AssouadParams& params) {
    out << "d = " << params.d << "\n";
    out << "q = " << params.q << "\n";
    out << "m = " << params.m << "\n";
    out << "w = " << format_double(params.w) << "\n";
    out << "r = " << format_double(params.r) << "\n";
    out << "alpha = " << format_double(params.alpha) << "\n";
    out << "sigma = ";
    for (auto bit : params.sigma) {
        out << static_cast<int>(bit);
    }
    out << "\n";
    out << "region_lo =";
    for (double v : params.residual_region.lo) {
        out << ' ' << format_double(v);
    }
    out << "\n";
    out << "region_hi =";
    for (double v : params.residual_region.hi) {
        out << ' ' << format_double(v);
    }
    out << "\n";
}

void write_samples_csv(std::ostream& out, const std::vector<LabeledSample>& samples) {
    if (samples.empty()) {
        return;
    }
    const std::size_t d = samples.front().x.size();
    for (std::size_t i = 0; i < d; ++i) {
        out << "x_" << (i + 1) << ',';
    }
    out << "y,eta\n";
    for (const auto& s : samples) {
        for (double xi : s.x) {
            out << format_double(xi) << ',';
        }
        out << s.y << ',' << format_double(s.eta_at_x) << '\n';
    }
}

}  // namespace exrisk
