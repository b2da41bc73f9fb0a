#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "dsal/checkpoint.hpp"
#include "dsal/config.hpp"
#include "dsal/data.hpp"
#include "dsal/losses.hpp"
#include "dsal/net/forward.hpp"
#include "dsal/optim.hpp"

namespace dsal {

struct LossRow {
  Phase phase = Phase::PretrainDenoise;
  std::int64_t step = 0;
  LossReport report;
};

inline void write_loss_log_header(std::ostream& os) {
  os << "phase,step,batch_size,content,adv_denoise,total_denoise,bce,adv_sod,cyclic,"
        "total_sod,d1,d2,w1,w2,w3\n";
}

inline void write_loss_log_row(std::ostream& os, const LossRow& row, const LossWeights& w) {
  const LossReport& r = row.report;
  os << to_string(row.phase) << ',' << row.step << ',' << r.batch_size << ',' << r.content << ','
     << r.adv_denoise << ',' << r.total_denoise << ',' << r.bce << ',' << r.adv_sod << ','
     << r.cyclic << ',' << r.total_sod << ',' << r.d1 << ',' << r.d2 << ',' << w.w1 << ','
     << w.w2 << ',' << w.w3 << '\n';
}

// Owns the five networks, the optimizer states and the training RNG, and
// runs the three-phase schedule. One logical thread mutates parameters;
// everything else is pure per sample.
template <class S>
class Trainer {
 public:
  explicit Trainer(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    g1_.spec = build_denoiser_spec(cfg_.net.g1_depth_pairs, cfg_.net.g1_base_channels, 3, 3, "G1");
    g3_.spec = build_reverse_generator_spec(cfg_.net.g1_depth_pairs, cfg_.net.g1_base_channels);
    g2_.spec = build_saliency_generator_spec(cfg_.net.g2_width_scale);
    d1_.spec = build_discriminator_spec(3, cfg_.data.size, cfg_.net.d_width_scale, "D1");
    // D2 judges the saliency map stacked with its conditioning image.
    d2_.spec = build_discriminator_spec(4, cfg_.data.size, cfg_.net.d_width_scale, "D2");
  }

  const RunConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  std::int64_t step() const { return step_; }

  NetState<S>& g1() { return g1_; }
  NetState<S>& d1() { return d1_; }
  NetState<S>& g2() { return g2_; }
  NetState<S>& d2() { return d2_; }
  NetState<S>& g3() { return g3_; }

  long d1_updates = 0, g1_updates = 0, d2_updates = 0, g2_updates = 0, g3_updates = 0;

  // Starts a phase from scratch. pretrain_sod requires the denoising
  // checkpoint; joint requires both pretrain checkpoints. Networks the phase
  // does not train still carry their seed initialization so checkpoints are
  // always complete.
  void begin_phase(Phase p) {
    for (auto* n : {&g1_, &d1_, &g2_, &d2_, &g3_})
      if (n->params.layers.empty()) init_net(*n);
    switch (p) {
      case Phase::PretrainDenoise:
        init_net(g1_);
        init_net(d1_);
        break;
      case Phase::PretrainSod:
        require(denoise_ckpt_.has_value(),
                "pretrain_sod requires a pretrain_denoise checkpoint (G1 is frozen input)");
        g1_ = denoise_ckpt_->g1;
        d1_ = denoise_ckpt_->d1;
        init_net(g2_);
        init_net(d2_);
        init_net(g3_);
        break;
      case Phase::Joint:
        require(denoise_ckpt_.has_value() && sod_ckpt_.has_value(),
                "joint phase requires both pretrain_denoise and pretrain_sod checkpoints");
        g1_ = denoise_ckpt_->g1;
        d1_ = denoise_ckpt_->d1;
        g2_ = sod_ckpt_->g2;
        d2_ = sod_ckpt_->d2;
        g3_ = sod_ckpt_->g3;
        break;
    }
    // Fine-tuning restarts the optimizer moments in every phase.
    for (auto* n : {&g1_, &d1_, &g2_, &d2_, &g3_}) n->adam.init(n->spec);
    phase_ = p;
    step_ = 0;
    rng_ = Rng(mix64(cfg_.train.seed, fnv1a64(to_string(p))));
  }

  // Feeds a finished pretrain checkpoint in from disk (CLI path).
  void provide_checkpoint(const Checkpoint<S>& ckpt) {
    switch (ckpt.phase) {
      case Phase::PretrainDenoise: denoise_ckpt_ = ckpt; break;
      case Phase::PretrainSod: sod_ckpt_ = ckpt; break;
      case Phase::Joint: break;
    }
  }

  Checkpoint<S> make_checkpoint() const {
    Checkpoint<S> c;
    c.phase = phase_;
    c.step = step_;
    c.config_hash = config_hash(cfg_);
    c.g1 = g1_;
    c.d1 = d1_;
    c.g2 = g2_;
    c.d2 = d2_;
    c.g3 = g3_;
    c.rng_state = rng_.save_state();
    return c;
  }

  void restore_checkpoint(const Checkpoint<S>& c) {
    for (auto [mine, theirs] : {std::pair{&g1_, &c.g1}, {&d1_, &c.d1}, {&g2_, &c.g2},
                                {&d2_, &c.d2}, {&g3_, &c.g3}})
      require(spec_hash(mine->spec) == spec_hash(theirs->spec),
              cat("checkpoint network '", theirs->spec.name, "' does not match this config"));
    phase_ = c.phase;
    step_ = c.step;
    g1_ = c.g1;
    d1_ = c.d1;
    g2_ = c.g2;
    d2_ = c.d2;
    g3_ = c.g3;
    rng_ = Rng();
    rng_.load_state(c.rng_state);
  }

  // One denoising-GAN step: d_steps_per_g discriminator updates on
  // (clean real vs G1(noisy) fake), then one generator update on the total
  // denoising objective.
  LossReport train_step_denoise(const std::vector<const SampleTriplet<S>*>& batch) {
    require(phase_ == Phase::PretrainDenoise || phase_ == Phase::Joint,
            "train_step_denoise: phase must be pretrain_denoise or joint");
    require(!batch.empty(), "train_step_denoise: empty batch");
    const int n = int(batch.size());
    const S inv_n = S(1) / S(n);
    const LossWeights& w = cfg_.loss.weights;
    ensure_scratch(n);

    LossReport rep;
    rep.batch_size = n;

    for (int i = 0; i < n; ++i) forward(g1_.spec, g1_.params, batch[i]->noisy, scratch_[i].gen);

    NetworkParams<S> d_grad = zero_params<S>(d1_.spec);
    for (int k = 0; k < cfg_.train.d_steps_per_g; ++k) {
      d_grad.set_zero();
      rep.d1 = 0;
      for (int i = 0; i < n; ++i) {
        auto& sc = scratch_[i];
        const S real = discriminator_score(forward(d1_.spec, d1_.params, batch[i]->clean, sc.disc_a));
        const S fake =
            discriminator_score(forward(d1_.spec, d1_.params, sc.gen.out.back(), sc.disc_b));
        std::vector<S> gr, gf;
        rep.d1 += double(discriminator_loss<S>({real}, {fake}, w.eps, &gr, &gf)) / n;
        Tensor<S> dscore(1, 1, 1);
        dscore.data()[0] = gr[0] * inv_n;
        backward(d1_.spec, d1_.params, sc.disc_a, dscore, &d_grad);
        dscore.data()[0] = gf[0] * inv_n;
        backward(d1_.spec, d1_.params, sc.disc_b, dscore, &d_grad);
      }
      clip_global_norm(d_grad, cfg_.train.grad_clip);
      d1_.adam.step(d1_.params, d_grad, cfg_.train.disc_lr);
      ++d1_updates;
    }

    NetworkParams<S> g_grad = zero_params<S>(g1_.spec);
    for (int i = 0; i < n; ++i) {
      auto& sc = scratch_[i];
      const Tensor<S>& pred = sc.gen.out.back();
      std::vector<Tensor<S>> gc;
      rep.content +=
          double(denoise_content_loss<S>({pred}, {batch[i]->clean}, cfg_.loss.l2_squared, &gc)) / n;
      const S s = discriminator_score(forward(d1_.spec, d1_.params, pred, sc.disc_a));
      std::vector<S> gs;
      rep.adv_denoise += double(adversarial_gen_loss<S>({s}, w.eps, &gs)) / n;
      Tensor<S> dscore(1, 1, 1);
      dscore.data()[0] = S(w.w1) * gs[0] * inv_n;
      Tensor<S> dpred = backward(d1_.spec, d1_.params, sc.disc_a, dscore, nullptr);
      dpred.array() += gc[0].array() * inv_n;
      backward(g1_.spec, g1_.params, sc.gen, dpred, &g_grad);
    }
    clip_global_norm(g_grad, cfg_.train.grad_clip);
    g1_.adam.step(g1_.params, g_grad, cfg_.train.gen_lr);
    ++g1_updates;

    rep.total_denoise = double(total_denoise_loss(S(rep.content), S(rep.adv_denoise), w));
    check_finite(rep, batch);
    return rep;
  }

  // One saliency-GAN step: D2 updates on (mask real vs G2(G1(x)) fake, each
  // stacked with the conditioning denoised image), then a generator update on
  // the total SOD objective. G1 receives gradient only in the joint phase
  // (and only when joint.freeze_g1 is off).
  LossReport train_step_sod(const std::vector<const SampleTriplet<S>*>& batch) {
    require(phase_ == Phase::PretrainSod || phase_ == Phase::Joint,
            "train_step_sod: phase must be pretrain_sod or joint");
    require(!batch.empty(), "train_step_sod: empty batch");
    const int n = int(batch.size());
    const S inv_n = S(1) / S(n);
    const LossWeights& w = cfg_.loss.weights;
    const bool train_g1 = phase_ == Phase::Joint && !cfg_.joint.freeze_g1;
    ensure_scratch(n);

    LossReport rep;
    rep.batch_size = n;

    for (int i = 0; i < n; ++i) {
      auto& sc = scratch_[i];
      const Tensor<S>& den = forward(g1_.spec, g1_.params, batch[i]->noisy, sc.gen);
      forward(g2_.spec, g2_.params, den, sc.sod);
    }

    NetworkParams<S> d_grad = zero_params<S>(d2_.spec);
    for (int k = 0; k < cfg_.train.d_steps_per_g; ++k) {
      d_grad.set_zero();
      rep.d2 = 0;
      for (int i = 0; i < n; ++i) {
        auto& sc = scratch_[i];
        const Tensor<S>& den = sc.gen.out.back();
        const S real = discriminator_score(
            forward(d2_.spec, d2_.params, concat_channels(batch[i]->mask, den), sc.disc_a));
        const S fake = discriminator_score(
            forward(d2_.spec, d2_.params, concat_channels(sc.sod.out.back(), den), sc.disc_b));
        std::vector<S> gr, gf;
        rep.d2 += double(discriminator_loss<S>({real}, {fake}, w.eps, &gr, &gf)) / n;
        Tensor<S> dscore(1, 1, 1);
        dscore.data()[0] = gr[0] * inv_n;
        backward(d2_.spec, d2_.params, sc.disc_a, dscore, &d_grad);
        dscore.data()[0] = gf[0] * inv_n;
        backward(d2_.spec, d2_.params, sc.disc_b, dscore, &d_grad);
      }
      clip_global_norm(d_grad, cfg_.train.grad_clip);
      d2_.adam.step(d2_.params, d_grad, cfg_.train.disc_lr);
      ++d2_updates;
    }

    NetworkParams<S> g2_grad = zero_params<S>(g2_.spec);
    NetworkParams<S> g3_grad = zero_params<S>(g3_.spec);
    NetworkParams<S> g1_grad;
    if (train_g1) g1_grad = zero_params<S>(g1_.spec);

    for (int i = 0; i < n; ++i) {
      auto& sc = scratch_[i];
      const Tensor<S>& den = sc.gen.out.back();
      const Tensor<S>& pred = sc.sod.out.back();
      const Tensor<S>& recon = forward(g3_.spec, g3_.params, pred, sc.cyc);

      std::vector<Tensor<S>> gb;
      rep.bce += double(saliency_bce_loss<S>({pred}, {batch[i]->mask}, w.eps, &gb)) / n;

      std::vector<Tensor<S>> grec, gden_cyc;
      rep.cyclic +=
          double(cycle_loss<S>({recon}, {den}, cfg_.loss.l2_squared, &grec, &gden_cyc)) / n;

      const S s = discriminator_score(
          forward(d2_.spec, d2_.params, concat_channels(pred, den), sc.disc_a));
      std::vector<S> gs;
      rep.adv_sod += double(adversarial_gen_loss<S>({s}, w.eps, &gs)) / n;
      Tensor<S> dscore(1, 1, 1);
      dscore.data()[0] = S(w.w2) * gs[0] * inv_n;
      const Tensor<S> dconcat = backward(d2_.spec, d2_.params, sc.disc_a, dscore, nullptr);
      auto [dpred_adv, dden_adv] = split_channels(dconcat, 1);

      grec[0].array() *= S(w.w3) * inv_n;
      Tensor<S> dpred = backward(g3_.spec, g3_.params, sc.cyc, grec[0], &g3_grad);
      dpred.array() += gb[0].array() * inv_n + dpred_adv.array();

      Tensor<S> dden = backward(g2_.spec, g2_.params, sc.sod, dpred, &g2_grad);
      if (train_g1) {
        dden.array() += dden_adv.array() + gden_cyc[0].array() * S(w.w3) * inv_n;
        backward(g1_.spec, g1_.params, sc.gen, dden, &g1_grad);
      }
    }

    clip_global_norm(g2_grad, cfg_.train.grad_clip);
    g2_.adam.step(g2_.params, g2_grad, cfg_.train.gen_lr);
    ++g2_updates;
    clip_global_norm(g3_grad, cfg_.train.grad_clip);
    g3_.adam.step(g3_.params, g3_grad, cfg_.train.gen_lr);
    ++g3_updates;
    if (train_g1) {
      clip_global_norm(g1_grad, cfg_.train.grad_clip);
      g1_.adam.step(g1_.params, g1_grad, cfg_.train.gen_lr);
      ++g1_updates;
    }

    rep.total_sod = double(total_sod_loss(S(rep.bce), S(rep.adv_sod), S(rep.cyclic), w));
    check_finite(rep, batch);
    return rep;
  }

  // Each joint step runs a denoising sub-step (Eq. 5 objective) followed by
  // an SOD sub-step (Eq. 9 objective, backpropagated into G1).
  LossReport train_step(const std::vector<const SampleTriplet<S>*>& batch) {
    switch (phase_) {
      case Phase::PretrainDenoise:
        return train_step_denoise(batch);
      case Phase::PretrainSod:
        return train_step_sod(batch);
      case Phase::Joint: {
        LossReport a = train_step_denoise(batch);
        LossReport b = train_step_sod(batch);
        b.content = a.content;
        b.adv_denoise = a.adv_denoise;
        b.total_denoise = a.total_denoise;
        b.d1 = a.d1;
        return b;
      }
    }
    throw ValidationError("train_step: bad phase");
  }

  // Advances the current phase to target_steps, drawing batches from the
  // training RNG, appending to the log and checkpointing on cadence.
  void run_phase(const std::vector<SampleTriplet<S>>& data, std::int64_t target_steps,
                 const std::string& out_dir = {}, std::vector<LossRow>* log = nullptr,
                 std::ostream* log_csv = nullptr) {
    require(!data.empty(), "run_phase: empty training set");
    while (step_ < target_steps) {
      std::vector<const SampleTriplet<S>*> batch(std::size_t(cfg_.train.batch_size));
      for (auto& b : batch) b = &data[std::size_t(rng_.uniform_int(int(data.size())))];
      LossRow row;
      row.report = train_step(batch);
      ++step_;
      row.phase = phase_;
      row.step = step_;
      require(totals_consistent(row.report, cfg_.loss.weights),
              cat("loss totals inconsistent at ", to_string(phase_), " step ", step_));
      if (log) log->push_back(row);
      if (log_csv) write_loss_log_row(*log_csv, row, cfg_.loss.weights);
      if (!out_dir.empty() && cfg_.train.checkpoint_every > 0 &&
          step_ % cfg_.train.checkpoint_every == 0 && step_ < target_steps)
        save_checkpoint(periodic_path(out_dir), make_checkpoint());
    }
    const Checkpoint<S> final_ckpt = make_checkpoint();
    if (!out_dir.empty()) save_checkpoint(final_path(out_dir, phase_), final_ckpt);
    provide_checkpoint(final_ckpt);
  }

  static std::string final_path(const std::string& out_dir, Phase p) {
    return (std::filesystem::path(out_dir) / cat("ckpt_", to_string(p), ".bin")).string();
  }

 private:
  std::string periodic_path(const std::string& out_dir) const {
    return (std::filesystem::path(out_dir) /
            cat("ckpt_", to_string(phase_), "_step", step_, ".bin"))
        .string();
  }

  void init_net(NetState<S>& net) {
    net.params = init_params<S>(net.spec, mix64(cfg_.train.seed, fnv1a64(net.spec.name)));
    net.adam.init(net.spec);
  }

  struct Scratch {
    Workspace<S> gen, sod, cyc, disc_a, disc_b;
  };

  void ensure_scratch(int n) {
    if (int(scratch_.size()) < n) scratch_.resize(std::size_t(n));
  }

  void check_finite(const LossReport& rep, const std::vector<const SampleTriplet<S>*>& batch) {
    if (rep.all_finite()) return;
    std::string ids;
    for (const auto* t : batch) ids += t->id + " ";
    throw NumericError(cat("non-finite loss at ", to_string(phase_), " step ", step_ + 1,
                           "; batch sample ids: ", ids));
  }

  RunConfig cfg_;
  NetState<S> g1_, d1_, g2_, d2_, g3_;
  Phase phase_ = Phase::PretrainDenoise;
  std::int64_t step_ = 0;
  Rng rng_;
  std::optional<Checkpoint<S>> denoise_ckpt_, sod_ckpt_;
  std::vector<Scratch> scratch_;
};

// Executes the phases in order against one training corpus, writing
// checkpoints, the resolved config and a loss-log CSV into out_dir (when
// given). Returns the final checkpoint.
template <class S>
Checkpoint<S> run_schedule(const RunConfig& cfg, const std::vector<Phase>& phases,
                           const std::vector<SampleTriplet<S>>& train_data,
                           const std::string& out_dir = {},
                           std::vector<LossRow>* log = nullptr) {
  require(!phases.empty(), "run_schedule: no phases given");
  Trainer<S> trainer(cfg);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_config((std::filesystem::path(out_dir) / "config.json").string(), cfg);
  }
  std::ofstream csv;
  if (!out_dir.empty()) {
    csv.open((std::filesystem::path(out_dir) / "train_log.csv").string());
    write_loss_log_header(csv);
  }
  for (Phase p : phases) {
    trainer.begin_phase(p);
    const std::int64_t steps = p == Phase::PretrainDenoise ? cfg.train.steps_pretrain_denoise
                               : p == Phase::PretrainSod   ? cfg.train.steps_pretrain_sod
                                                           : cfg.train.steps_joint;
    trainer.run_phase(train_data, steps, out_dir, log, csv.is_open() ? &csv : nullptr);
  }
  return trainer.make_checkpoint();
}

}  // namespace dsal
