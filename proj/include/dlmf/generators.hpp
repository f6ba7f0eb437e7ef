#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/dataset.hpp"
#include "dlmf/network.hpp"
#include "dlmf/reference.hpp"
#include "dlmf/rng.hpp"
#include "dlmf/transform.hpp"

namespace dlmf {

enum class DGLoss { KL, WA };

//! Adversarial training settings. The generator reuses TrainSpec; the
//! discriminator shares its optimizer and learning rate. clip_b1/b2 bound
//! generator and discriminator parameters under the KL objective, clip_b3/b4
//! under the Wasserstein one (b4 stands in for the critic's Lipschitz
//! constraint).
struct AdversarialSpec {
    TrainSpec gen_spec;
    std::vector<int> disc_hidden = {50, 25};
    double clip_b1 = 20.0;
    double clip_b2 = 20.0;
    double clip_b3 = 20.0;
    double clip_b4 = 1.0;
    DGLoss loss = DGLoss::KL;

    double gen_clip() const { return loss == DGLoss::KL ? clip_b1 : clip_b3; }
    double disc_clip() const { return loss == DGLoss::KL ? clip_b2 : clip_b4; }
};

inline void validate_adversarial_spec(const AdversarialSpec& spec) {
    validate_train_spec(spec.gen_spec);
    if (spec.disc_hidden.empty()) {
        throw std::invalid_argument("adversarial spec: discriminator needs a hidden layer");
    }
    if (!(spec.clip_b1 > 0.0 && spec.clip_b2 > 0.0 && spec.clip_b3 > 0.0 && spec.clip_b4 > 0.0)) {
        throw std::invalid_argument("adversarial spec: clip bounds must be positive");
    }
}

//! The minimax objective evaluated at the current pair of networks:
//! mean D(G(x,z), x) - mean exp(D(y, x)) for KL, and with the plain second
//! moment term for WA. The discriminator ascends this, the generator
//! descends it.
inline double adversarial_objective(const Network& gen, const Network& disc,
                                    const Eigen::MatrixXd& gen_inputs, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y, DGLoss loss) {
    const Eigen::Index n = x.rows();
    const Eigen::VectorXd fake = forward_batch(gen, gen_inputs);
    Eigen::MatrixXd d_fake_in(n, 1 + x.cols());
    d_fake_in.col(0) = fake;
    d_fake_in.rightCols(x.cols()) = x;
    Eigen::MatrixXd d_real_in = d_fake_in;
    d_real_in.col(0) = y;
    const Eigen::VectorXd out_fake = forward_batch(disc, d_fake_in);
    const Eigen::VectorXd out_real = forward_batch(disc, d_real_in);
    if (loss == DGLoss::KL) {
        return out_fake.mean() - out_real.array().exp().mean();
    }
    return out_fake.mean() - out_real.mean();
}

//! Training diagnostics surfaced to callers chasing instability.
struct DGDiagnostics {
    double final_objective = 0.0;
    double max_abs_disc_param = 0.0;   // largest magnitude seen after any clip
};

//! Adversarial fit of a deep generator: per epoch one full-batch
//! discriminator ascent step, then one full-batch generator descent step,
//! each followed by a parameter clip to its bound. Reference draws are
//! sampled once and held fixed, exactly as in the transform training loop.
//! Aborts with a diagnostic if the objective leaves the finite range.
inline TrainedTransform train_dg(const Dataset& ds, const ReferenceDist& ref,
                                 const AdversarialSpec& spec, RngStream& rng,
                                 DGDiagnostics* diag = nullptr) {
    validate_dataset(ds);
    validate_reference(ref);
    validate_adversarial_spec(spec);

    const Eigen::Index n = ds.n();
    const int d = static_cast<int>(ds.d());
    const TrainSpec& gs = spec.gen_spec;

    RngStream zrng = rng.child("z");
    Eigen::MatrixXd gen_inputs(n, d + ref.p);
    gen_inputs.leftCols(d) = ds.x;
    gen_inputs.rightCols(ref.p) = sample_reference(ref, n, zrng);

    std::vector<int> gen_sizes;
    gen_sizes.push_back(d + ref.p);
    gen_sizes.insert(gen_sizes.end(), gs.hidden.begin(), gs.hidden.end());
    gen_sizes.push_back(1);
    std::vector<int> disc_sizes;
    disc_sizes.push_back(1 + d);
    disc_sizes.insert(disc_sizes.end(), spec.disc_hidden.begin(), spec.disc_hidden.end());
    disc_sizes.push_back(1);

    TrainedTransform t;
    t.net = mlp_init(gen_sizes, gs.seed);
    t.ref = ref;
    t.d = d;
    t.method = spec.loss == DGLoss::KL ? "dgkl" : "dgwa";
    t.meta.seed = gs.seed;
    Network disc = mlp_init(disc_sizes, RngStream::derive_seed(gs.seed, "disc-init"));

    OptimizerState gen_opt = make_optimizer(gs.optimizer, gs.lr, t.net);
    OptimizerState disc_opt = make_optimizer(gs.optimizer, gs.lr, disc);

    const double inv_n = 1.0 / static_cast<double>(n);
    double max_abs_disc = max_abs_param(disc);
    double objective = 0.0;

    Eigen::MatrixXd d_real_in(n, 1 + d);
    d_real_in.col(0) = ds.y;
    d_real_in.rightCols(d) = ds.x;

    for (int epoch = 1; epoch <= gs.epochs; ++epoch) {
        // Discriminator ascent.
        ForwardCache gen_cache = forward_cached(t.net, gen_inputs);
        Eigen::MatrixXd d_fake_in(n, 1 + d);
        d_fake_in.col(0) = gen_cache.out;
        d_fake_in.rightCols(d) = ds.x;

        ForwardCache fake_cache = forward_cached(disc, d_fake_in);
        ForwardCache real_cache = forward_cached(disc, d_real_in);
        const Eigen::VectorXd g_fake = Eigen::VectorXd::Constant(n, inv_n);
        Eigen::VectorXd g_real(n);
        if (spec.loss == DGLoss::KL) {
            g_real = -inv_n * real_cache.out.array().exp();
            objective = fake_cache.out.mean() - real_cache.out.array().exp().mean();
        } else {
            g_real.setConstant(-inv_n);
            objective = fake_cache.out.mean() - real_cache.out.mean();
        }
        if (!std::isfinite(objective)) {
            throw std::runtime_error("train_dg: adversarial objective became non-finite at epoch " +
                                     std::to_string(epoch) + " (" + t.method + ")");
        }
        ParamGrads disc_grads = backward(disc, fake_cache, g_fake);
        const ParamGrads disc_grads_real = backward(disc, real_cache, g_real);
        for (std::size_t l = 0; l < disc.num_layers(); ++l) {
            disc_grads.w[l] += disc_grads_real.w[l];
            disc_grads.b[l] += disc_grads_real.b[l];
            disc_grads.w[l] = -disc_grads.w[l];   // ascend
            disc_grads.b[l] = -disc_grads.b[l];
        }
        optimizer_step(disc_opt, disc, disc_grads);
        clip_params(disc, spec.disc_clip());
        max_abs_disc = std::max(max_abs_disc, max_abs_param(disc));

        // Generator descent against the updated discriminator.
        ForwardCache fake_cache2 = forward_cached(disc, d_fake_in);
        Eigen::MatrixXd d_input_grad;
        backward(disc, fake_cache2, g_fake, &d_input_grad);
        const ParamGrads gen_grads = backward(t.net, gen_cache, d_input_grad.col(0));
        optimizer_step(gen_opt, t.net, gen_grads);
        clip_params(t.net, spec.gen_clip());

        t.meta.epochs_run = epoch;
        if (gs.early_stop && epoch % gs.early_stop->period == 0) {
            const int check = epoch / gs.early_stop->period;
            if (detail::validation_coverage_reached(
                    t, *gs.early_stop, rng.child("earlystop/" + std::to_string(check)))) {
                t.meta.stopped_early = true;
                break;
            }
        }
    }

    t.meta.final_train_loss =
        gs.epochs > 0 ? adversarial_objective(t.net, disc, gen_inputs, ds.x, ds.y, spec.loss) : 0.0;
    if (!std::isfinite(t.meta.final_train_loss)) {
        throw std::runtime_error("train_dg: final objective is non-finite (" + t.method + ")");
    }
    if (diag) {
        diag->final_objective = t.meta.final_train_loss;
        diag->max_abs_disc_param = max_abs_disc;
    }
    return t;
}

} // namespace dlmf
