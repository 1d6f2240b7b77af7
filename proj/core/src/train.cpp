#include "exrisk/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "exrisk/csv.hpp"
#include "exrisk/logistic.hpp"
#include "exrisk/rng.hpp"

namespace exrisk {

namespace {

// Fisher-Yates with our deterministic stream.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

struct RestartOutcome {
    NetworkSpec net;
    double phi_risk = 0.0;
    std::size_t epochs = 0;
    std::vector<double> epoch_risks;
};

RestartOutcome run_restart(const NetworkSpec& arch, std::span<const LabeledSample> data,
                           const TrainConfig& cfg, std::uint64_t restart_seed) {
    Rng rng(restart_seed);
    NetworkSpec net = arch;
    initialize_weights(net, rng);
    const LossProfile loss{net.clamp_bound};

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<LabeledSample> batch;
    batch.reserve(cfg.batch_size);

    double best_risk = empirical_phi_risk(net, data);
    double last_risk = best_risk;
    std::vector<double> epoch_risks;
    std::size_t stale = 0;
    std::size_t epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        const double lr = cfg.learning_rate / (1.0 + cfg.lr_decay * static_cast<double>(epoch));
        shuffle_indices(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch.push_back(data[order[k]]);
            }
            GradientStore grad = gradient(net, batch, loss);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                auto& layer = net.layers[l];
                const auto& g = grad.layers[l];
                for (std::size_t i = 0; i < layer.weights.size(); ++i) {
                    layer.weights[i] -= lr * g.weights[i];
                }
                for (std::size_t i = 0; i < layer.biases.size(); ++i) {
                    layer.biases[i] -= lr * g.biases[i];
                }
            }
        }
        bool weights_finite = true;
        for (const auto& layer : net.layers) {
            for (double w : layer.weights) {
                weights_finite = weights_finite && std::isfinite(w);
            }
            for (double b : layer.biases) {
                weights_finite = weights_finite && std::isfinite(b);
            }
        }
        const double risk = weights_finite ? empirical_phi_risk(net, data)
                                           : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(risk)) {
            std::ostringstream msg;
            msg << "train_erm: diverged at epoch " << epoch << " (lr " << lr
                << ", previous risk " << last_risk
                << (weights_finite ? ", non-finite loss)" : ", non-finite weights)");
            throw TrainingError(msg.str());
        }
        if (risk < best_risk) {
            best_risk = risk;
        }
        epoch_risks.push_back(risk);
        const double rel_improvement = (last_risk - risk) / std::max(last_risk, 1e-12);
        stale = rel_improvement < cfg.plateau_tol ? stale + 1 : 0;
        last_risk = risk;
        if (stale >= cfg.plateau_epochs) {
            ++epoch;
            break;
        }
    }
    return {std::move(net), last_risk, epoch, std::move(epoch_risks)};
}

}  // namespace

TrainResult train_erm(const NetworkSpec& arch, std::span<const LabeledSample> data,
                      const TrainConfig& cfg) {
    cfg.validate();
    arch.validate();
    if (data.empty()) {
        throw std::invalid_argument("train_erm: empty data");
    }
    if (data.front().x.size() != arch.input_dim) {
        throw std::invalid_argument("train_erm: architecture/data dimension mismatch");
    }

    TrainResult best;
    bool have_best = false;
    for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
        RestartOutcome outcome =
            run_restart(arch, data, cfg, derive_seed(cfg.seed, 0x7261696e, restart));
        if (!have_best || outcome.phi_risk < best.final_phi_risk) {
            best.net = std::move(outcome.net);
            best.final_phi_risk = outcome.phi_risk;
            best.epochs_run = outcome.epochs;
            best.restart_index = restart;
            best.epoch_risks = std::move(outcome.epoch_risks);
            have_best = true;
        }
    }
    return best;
}

int plug_in(const NetworkSpec& net, std::span<const double> x) {
    return forward(net, x) >= 0.0 ? 1 : 0;
}

namespace {

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
    }
    double mean(std::size_t n) const { return sum / static_cast<double>(n); }
    double se(std::size_t n) const {
        const double m = mean(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
        return std::sqrt(var / static_cast<double>(n));
    }
};

}  // namespace

RiskReport exact_excess_risk(const AssouadParams& params, const NetworkSpec& net,
                             std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 1) {
        throw std::invalid_argument("exact_excess_risk: n_mc must be >= 1");
    }
    const std::vector<LabeledSample> points = sample(params, n_mc, seed);
    Accumulator zero_one, excess, phi, excess_phi;
    for (const auto& pt : points) {
        const double eta = pt.eta_at_x;
        const int pred = plug_in(net, pt.x);
        const int bayes = eta >= 0.5 ? 1 : 0;

        zero_one.add(pred == 1 ? 1.0 - eta : eta);
        excess.add(pred == bayes ? 0.0 : std::abs(2.0 * eta - 1.0));

        const double g = forward(net, pt.x);
        const double phi_val = eta * logistic_loss(g) + (1.0 - eta) * logistic_loss(-g);
        phi.add(phi_val);
        const double fstar = phi_risk_minimizer(std::clamp(eta, 1e-12, 1.0 - 1e-12));
        const double phi_star =
            eta * logistic_loss(fstar) + (1.0 - eta) * logistic_loss(-fstar);
        excess_phi.add(phi_val - phi_star);
    }
    RiskReport report;
    report.n_eval = n_mc;
    report.zero_one_risk = zero_one.mean(n_mc);
    report.se_zero_one = zero_one.se(n_mc);
    report.excess_risk = excess.mean(n_mc);
    report.se_excess = excess.se(n_mc);
    report.phi_risk = phi.mean(n_mc);
    report.se_phi = phi.se(n_mc);
    report.excess_phi_risk = excess_phi.mean(n_mc);
    report.se_excess_phi = excess_phi.se(n_mc);
    return report;
}

double excess_phi_risk(const AssouadParams& params, const NetworkSpec& net, std::size_t n_mc,
                       std::uint64_t seed) {
    return exact_excess_risk(params, net, n_mc, seed).excess_phi_risk;
}

const char* const kRiskReportCsvHeader =
    "n,seed,W,depth,train_phi_risk,phi_risk,excess_phi_risk,zero_one_risk,excess_risk,"
    "se_excess";

std::string risk_report_csv_row(std::size_t n, std::uint64_t seed, std::size_t param_count,
                                std::size_t depth, double train_phi_risk,
                                const RiskReport& report) {
    std::ostringstream row;
    row << n << ',' << seed << ',' << param_count << ',' << depth << ','
        << format_double(train_phi_risk) << ',' << format_double(report.phi_risk) << ','
        << format_double(report.excess_phi_risk) << ',' << format_double(report.zero_one_risk)
        << ',' << format_double(report.excess_risk) << ',' << format_double(report.se_excess);
    return row.str();
}

}  // namespace exrisk
