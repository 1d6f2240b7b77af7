#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "exrisk/assouad.hpp"
#include "exrisk/network.hpp"

namespace exrisk {

struct TrainConfig {
    double learning_rate = 0.5;
    double lr_decay = 0.01;  // lr_t = learning_rate / (1 + lr_decay * epoch)
    std::size_t batch_size = 64;
    std::size_t max_epochs = 400;
    double plateau_tol = 1e-5;        // relative full-data improvement
    std::size_t plateau_epochs = 10;  // epochs without improvement before stopping
    std::size_t restarts = 1;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate > 0.0) || restarts < 1 || batch_size < 1 || max_epochs < 1) {
            throw std::invalid_argument("TrainConfig: bad configuration");
        }
    }
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    NetworkSpec net;
    double final_phi_risk = 0.0;  // full-data empirical phi-risk of the winner
    std::size_t epochs_run = 0;   // of the winning restart
    std::size_t restart_index = 0;
    std::vector<double> epoch_risks;  // winner's full-data phi-risk per epoch
};

// Multi-restart mini-batch gradient descent on the empirical phi-risk.
// Returns the restart with the lowest full-data phi-risk; deterministic
// given cfg.seed. Throws TrainingError when the loss diverges.
TrainResult train_erm(const NetworkSpec& arch, std::span<const LabeledSample> data,
                      const TrainConfig& cfg);

// Plug-in classifier 1{forward(net, x) >= 0}.
int plug_in(const NetworkSpec& net, std::span<const double> x);

struct RiskReport {
    double zero_one_risk = 0.0;
    double phi_risk = 0.0;
    double excess_risk = 0.0;
    double excess_phi_risk = 0.0;
    double se_zero_one = 0.0;
    double se_phi = 0.0;
    double se_excess = 0.0;
    double se_excess_phi = 0.0;
    std::size_t n_eval = 0;
};

// Monte Carlo risk evaluation against the known distribution. X is sampled
// from P_X; labels are integrated out exactly through eta_sigma
// (Rao-Blackwellization), so label noise never enters the estimates:
//   zero-one integrand  eta 1{p_f=0} + (1-eta) 1{p_f=1}
//   excess integrand    |2 eta - 1| 1{p_f != bayes}
//   excess-phi integrand eta(phi(g)-phi(f*)) + (1-eta)(phi(-g)-phi(-f*)).
RiskReport exact_excess_risk(const AssouadParams& params, const NetworkSpec& net,
                             std::size_t n_mc, std::uint64_t seed);

// The excess-phi component alone.
double excess_phi_risk(const AssouadParams& params, const NetworkSpec& net, std::size_t n_mc,
                       std::uint64_t seed);

// One CSV row: n, seed, W, depth, train_phi_risk, phi_risk, excess_phi_risk,
// zero_one_risk, excess_risk, se_excess.
std::string risk_report_csv_row(std::size_t n, std::uint64_t seed, std::size_t param_count,
                                std::size_t depth, double train_phi_risk,
                                const RiskReport& report);
extern const char* const kRiskReportCsvHeader;

}  // namespace exrisk
