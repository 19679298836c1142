// Expectation-maximization fitting of filter noise parameters.
//
// Each iteration smooths the measurement sequences under the current
// parameters, then re-estimates process noise, measurement noise, and the
// initial state moments in closed form from the smoothed moments and
// lag-one cross-covariances. The transition is re-linearized at the
// smoothed means for the M-step. Process noise terms are rescaled to the
// reference interval so sequences of different rates remain comparable.
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "evball/ekf.hpp"
#include "evball/flight.hpp"

namespace evball {

struct EmOptions {
    int max_iters = 20;
    bool fit_q = true;
    bool fit_rm = true;
    bool fit_init = true;
};

struct EmResult {
    EkfParams params;            // best-likelihood iterate
    std::vector<double> loglik;  // loglik[i] evaluates the params of iteration i
    int best_iter = 0;
};

namespace detail {

// Lifts slightly negative eigenvalues caused by rounding; anything clearly
// indefinite is a genuine failure.
template <typename Mat>
void psd_repair(Mat& m) {
    m = (0.5 * (m + m.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    const double eigmin = es.eigenvalues().minCoeff();
    if (eigmin < -1e-6)
        throw std::runtime_error("em: estimated covariance is indefinite");
    if (eigmin < 0) m += (1e-12 - eigmin) * Mat::Identity(m.rows(), m.cols());
}

}  // namespace detail

inline EmResult em_fit(std::span<const std::vector<Measurement3>> trajectories,
                       const EkfParams& init, const BallParams& ball,
                       const EmOptions& opt = {}) {
    if (trajectories.empty()) throw std::invalid_argument("em: no trajectories");
    if (opt.max_iters < 1) throw std::invalid_argument("em: max_iters must be >= 1");
    for (const auto& tr : trajectories)
        if (tr.size() < 10)
            throw std::invalid_argument("em: each trajectory needs at least 10 measurements");

    EmResult result;
    EkfParams params = init;

    for (int iter = 0; iter <= opt.max_iters; ++iter) {
        // E-step: smooth every trajectory under the current parameters.
        double loglik = 0;
        std::vector<FilterRun> runs;
        std::vector<std::vector<SmoothedStep>> smooths;
        runs.reserve(trajectories.size());
        smooths.reserve(trajectories.size());
        for (const auto& tr : trajectories) {
            runs.push_back(ekf_filter(tr, params, ball));
            loglik += runs.back().log_likelihood;
            smooths.push_back(rts_smooth(runs.back()));
        }
        result.loglik.push_back(loglik);
        if (loglik > result.loglik[result.best_iter]) result.best_iter = iter;
        if (iter == opt.max_iters) break;  // final evaluation only

        // M-step: closed-form re-estimates from the smoothed moments.
        Mat9 q_acc = Mat9::Zero();
        Eigen::Matrix3d rm_acc = Eigen::Matrix3d::Zero();
        State9 mu0_acc = State9::Zero();
        std::size_t n_q = 0, n_rm = 0;

        for (std::size_t k = 0; k < trajectories.size(); ++k) {
            const auto& steps = runs[k].steps;
            const auto& sm = smooths[k];
            const auto& obs = trajectories[k];
            for (std::size_t t = 1; t < steps.size(); ++t) {
                const double dt = steps[t].dt;
                if (dt <= 0) continue;
                const Mat9 f = rk4_jacobian_fd(sm[t - 1].m, dt, ball);
                const State9 r = sm[t].m - rk4_step(sm[t - 1].m, dt, ball);
                const Mat9 c = sm[t].P * sm[t - 1].G.transpose();
                Mat9 term = r * r.transpose() + sm[t].P - c * f.transpose() -
                            f * c.transpose() + f * sm[t - 1].P * f.transpose();
                q_acc += (params.dt_ref_s / dt) * term;
                ++n_q;
            }
            for (std::size_t t = 0; t < steps.size(); ++t) {
                const Eigen::Vector3d e = obs[t].z - sm[t].m.segment<3>(0);
                rm_acc += e * e.transpose() + sm[t].P.block<3, 3>(0, 0);
                ++n_rm;
            }
            mu0_acc += sm[0].m;
        }

        if (opt.fit_q && n_q > 0) {
            Mat9 q = q_acc / static_cast<double>(n_q);
            detail::psd_repair(q);
            params.Q = q;
        }
        if (opt.fit_rm && n_rm > 0) {
            Eigen::Matrix3d rm = rm_acc / static_cast<double>(n_rm);
            detail::psd_repair(rm);
            params.Rm = rm;
        }
        if (opt.fit_init) {
            const State9 mu0 = mu0_acc / static_cast<double>(trajectories.size());
            Mat9 p0_acc = Mat9::Zero();
            for (const auto& sm : smooths) {
                const State9 d = sm[0].m - mu0;
                p0_acc += sm[0].P + d * d.transpose();
            }
            Mat9 p0 = p0_acc / static_cast<double>(trajectories.size());
            detail::psd_repair(p0);
            params.mu0 = mu0;
            params.P0 = p0;
        }
    }

    // Recover the best iterate. Only the final parameter set is kept in
    // `params`, so rebuild by replaying when an earlier iterate won.
    if (result.best_iter == static_cast<int>(result.loglik.size()) - 1) {
        result.params = params;
    } else if (result.best_iter == 0) {
        result.params = init;
    } else {
        EmOptions replay = opt;
        replay.max_iters = result.best_iter;
        EmResult shorter = em_fit(trajectories, init, ball, replay);
        result.params = shorter.params;
    }
    return result;
}

inline EmResult em_fit(const std::vector<Measurement3>& trajectory, const EkfParams& init,
                       const BallParams& ball, const EmOptions& opt = {}) {
    const std::vector<std::vector<Measurement3>> wrap{trajectory};
    return em_fit(std::span<const std::vector<Measurement3>>(wrap), init, ball, opt);
}

}  // namespace evball
