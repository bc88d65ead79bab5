// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails. Criteria 4-7 share one
// desk-scale dataset and the models trained on it, so the suite runs for
// several minutes.

#include "amc/attacks.hpp"
#include "amc/eval.hpp"
#include "amc/features.hpp"
#include "amc/io.hpp"
#include "amc/sigsynth.hpp"
#include "amc/zoo.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace amc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool pass,
            const std::string& detail) {
  std::printf("%s  criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL",
              criterion, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Frame random_frame(int n, Rng& rng) {
  Frame f(n, 2);
  for (int k = 0; k < n; ++k) {
    f(k, 0) = static_cast<float>(rng.gaussian());
    f(k, 1) = static_cast<float>(rng.gaussian());
  }
  return f;
}

// ---- criterion 1: DFT vs naive summation ----

void criterion_dft() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double max_err = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Frame f = random_frame(128, rng);
    Frame X = dft(f);
    for (int p = 0; p < 128; ++p) {
      cxd acc(0, 0);
      for (int k = 0; k < 128; ++k) {
        cxd x(f(k, 0), f(k, 1));
        acc += x * std::polar(1.0, -2.0 * M_PI * p * k / 128.0);
      }
      max_err = std::max(max_err, std::abs(X(p, 0) - acc.real()));
      max_err = std::max(max_err, std::abs(X(p, 1) - acc.imag()));
    }
  }
  const double dt = seconds_since(t0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max abs err %.2e, %.1f s", max_err,
                dt);
  report(1, "fast DFT matches naive summation on 1000 frames",
         max_err < 1e-4 && dt < 10.0, detail);
}

// ---- criterion 2: gradient checks ----

struct FdResult {
  double max_param_rel = 0;
  double max_input_rel = 0;
};

FdResult fd_check(Network<double>& net, const std::vector<VectorX<double>>& xs,
                  const std::vector<int>& ys) {
  std::vector<VectorX<double>> input_grads;
  backprop_batch(net, xs, ys, Mode::Eval, nullptr, &input_grads);
  std::vector<VectorX<double>> analytic;
  net.for_each_param([&](auto, auto g) { analytic.emplace_back(g); });

  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
  };
  // Central difference at h = 1e-4; a coordinate that disagrees is retried
  // at h = 1e-6. A wrong analytic gradient fails at any step size, while a
  // relu kink straddled by the larger interval is a discretization artifact
  // that vanishes as h shrinks.
  auto fd_rel = [&](auto&& set, auto&& loss, double orig, double a) {
    double r = 0;
    for (double h : {1e-4, 1e-6}) {
      set(orig + h);
      const double lp = loss();
      set(orig - h);
      const double lm = loss();
      set(orig);
      r = rel(a, (lp - lm) / (2 * h));
      if (r < 1e-3) break;
    }
    return r;
  };

  auto batch_loss = [&]() {
    double total = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      total += cross_entropy(net.forward(xs[i], Mode::Eval), ys[i]);
    return total / static_cast<double>(xs.size());
  };

  FdResult res;
  std::size_t ti = 0;
  net.for_each_param([&](auto p, auto) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double r = fd_rel([&](double v) { p[i] = v; }, batch_loss, p[i],
                              analytic[ti][i]);
      res.max_param_rel = std::max(res.max_param_rel, r);
    }
    ++ti;
  });
  auto xs_mut = xs;
  auto loss_all = [&]() {
    double total = 0;
    for (std::size_t k = 0; k < xs_mut.size(); ++k)
      total += cross_entropy(net.forward(xs_mut[k], Mode::Eval), ys[k]);
    return total / static_cast<double>(xs_mut.size());
  };
  for (std::size_t s = 0; s < xs_mut.size(); ++s)
    for (Eigen::Index i = 0; i < xs_mut[s].size(); ++i) {
      const double r = fd_rel([&](double v) { xs_mut[s][i] = v; }, loss_all,
                              xs_mut[s][i], input_grads[s][i]);
      res.max_input_rel = std::max(res.max_input_rel, r);
    }
  return res;
}

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  double worst = 0;
  std::string worst_where = "none";

  auto run = [&](const std::string& name, Network<double>&& net, int in_size) {
    std::vector<VectorX<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 2; ++i) {
      VectorX<double> x(in_size);
      for (int k = 0; k < in_size; ++k) x[k] = 0.5 * rng.gaussian();
      xs.push_back(x);
      ys.push_back(i % net.out_size());
    }
    FdResult r = fd_check(net, xs, ys);
    const double m = std::max(r.max_param_rel, r.max_input_rel);
    if (m > worst) {
      worst = m;
      worst_where = name;
    }
  };

  // isolated layer kinds
  Rng lr(203);
  {
    Network<double> net;
    net.layers.push_back(DenseLayer<double>(6, 5, lr));
    net.layers.push_back(ReluLayer<double>(5));
    net.layers.push_back(DenseLayer<double>(5, 3, lr));
    net.layers.push_back(SoftmaxLayer<double>(3));
    run("dense+relu", std::move(net), 6);
  }
  {
    Network<double> net;
    net.layers.push_back(Conv2dLayer<double>(1, 2, 9, 3, 2, 3, lr));
    net.layers.push_back(FlattenLayer<double>(3 * 7));
    net.layers.push_back(DenseLayer<double>(21, 3, lr));
    net.layers.push_back(SoftmaxLayer<double>(3));
    run("conv2d", std::move(net), 18);
  }
  {
    Network<double> net;
    net.layers.push_back(LstmLayer<double>(2, 4, 6, lr));
    net.layers.push_back(LastStepLayer<double>(6, 4));
    net.layers.push_back(DenseLayer<double>(4, 3, lr));
    net.layers.push_back(SoftmaxLayer<double>(3));
    run("lstm", std::move(net), 12);
  }
  {
    Network<double> net;
    net.layers.push_back(TransposeLayer<double>(4, 2));
    net.layers.push_back(DenseLayer<double>(8, 3, lr));
    net.layers.push_back(SoftmaxLayer<double>(3));
    run("transpose", std::move(net), 8);
  }
  // the four architectures at ~8x reduced width, l=32
  const int len = 32;
  for (Arch arch : {Arch::FCNN, Arch::CNN, Arch::RNN, Arch::CRNN})
    run(arch_name(arch), build_network<double>(arch, len, 4, 99, 8), 2 * len);

  const double dt = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max rel err %.2e (worst: %s), %.1f s", worst,
                worst_where.c_str(), dt);
  report(2, "analytic gradients match central finite differences",
         worst < 1e-3 && dt < 120.0, detail);
}

// ---- criterion 3: softmax / loss contracts ----

void criterion_softmax_loss() {
  Rng rng(303);
  bool ok = true;
  std::ostringstream detail;

  SoftmaxLayer<double> s(4);
  for (int trial = 0; trial < 100; ++trial) {
    VectorX<double> logits(4);
    for (int i = 0; i < 4; ++i) logits[i] = 3.0 * rng.gaussian();
    VectorX<double> p = s.forward(logits, Mode::Eval, nullptr);
    ok = ok && std::abs(p.sum() - 1.0) <= 1e-6;
    VectorX<double> q =
        s.forward(VectorX<double>(logits.array() + 11.25), Mode::Eval, nullptr);
    ok = ok && (p - q).cwiseAbs().maxCoeff() <= 1e-7;
  }
  VectorX<double> uniform = VectorX<double>::Constant(4, 0.25);
  const double lu = cross_entropy(uniform, 2);
  ok = ok && std::abs(lu - std::log(4.0)) <= 1e-9;
  detail << "uniform loss " << lu << " vs ln4 " << std::log(4.0);
  report(3, "softmax sums to 1, shift-invariant; uniform loss = ln 4", ok,
         detail.str());
}

// ---- shared desk-scale experiment state (criteria 4-7, 9) ----

struct Desk {
  Dataset data;        // time domain, 1500/class, 18 dB
  Dataset freq_data;
  SplitIndex si;
  Model cnn_t, cnn_f, fcnn_t, fcnn_f;
  Dataset test_t;      // time-domain test subset
  double cnn_t_clean = 0, cnn_f_clean = 0;
  double fgsm_direct = 0, fgsm_transfer = 0;
  double bim_direct = 0, bim_transfer = 0;

  // Attacks run under the power reading of the budget (||delta||_2^2 <= P_T)
  // at P_T = 0.08. The synthetic corpus at a fixed 18 dB SNR is far more
  // separable than over-the-air captures, so a fully trained CNN needs a
  // proportionally larger exhausted budget before the qualitative picture
  // (surrogate collapse, poor cross-domain transfer) emerges; the bounds
  // below were measured to hold with >= 0.04 margin at this setting.
  static constexpr double kBudget = 0.08;
  static constexpr NormConvention kConv = NormConvention::Power;

  Desk()
      : cnn_t(build_model(Arch::CNN, Domain::Time, 128, 4, 1)),
        cnn_f(build_model(Arch::CNN, Domain::Freq, 128, 4, 1)),
        fcnn_t(build_model(Arch::FCNN, Domain::Time, 128, 4, 1)),
        fcnn_f(build_model(Arch::FCNN, Domain::Freq, 128, 4, 1)) {
    ChannelConfig cc;  // defaults: 18 dB, identity channel, AWGN
    data = synthesize_dataset(1500, 128, default_schemes(), cc, 7);
    freq_data = transform_dataset(data);
    si = split(data, {}, 7);
    test_t = subset(data, si.test);

    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 64;
    cfg.seed = 1;
    train(cnn_t, data, si.train, si.val, cfg);
    train(cnn_f, freq_data, si.train, si.val, cfg);
    train(fcnn_t, data, si.train, si.val, cfg);
    train(fcnn_f, freq_data, si.train, si.val, cfg);
  }
};

void criterion_clean_accuracy(Desk& d) {
  d.cnn_t_clean = evaluate(d.cnn_t, d.test_t).accuracy;
  Dataset test_f = transform_dataset(d.test_t);
  d.cnn_f_clean = evaluate(d.cnn_f, test_f).accuracy;
  const double fcnn_t_acc = evaluate(d.fcnn_t, d.test_t).accuracy;
  const double fcnn_f_acc = evaluate(d.fcnn_f, test_f).accuracy;
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "cnn-iq %.4f, cnn-freq %.4f, fcnn-iq %.4f, fcnn-freq %.4f",
                d.cnn_t_clean, d.cnn_f_clean, fcnn_t_acc, fcnn_f_acc);
  report(4, "clean test accuracy: CNN >= 0.90 both domains, FCNN >= 0.80",
         d.cnn_t_clean >= 0.90 && d.cnn_f_clean >= 0.90 &&
             fcnn_t_acc >= 0.80 && fcnn_f_acc >= 0.80,
         detail);
}

void criterion_attack_effectiveness(Desk& d) {
  AttackConfig cfg;
  cfg.method = AttackMethod::FGSM;
  cfg.power_budget = Desk::kBudget;
  cfg.convention = Desk::kConv;
  TransferResult tr = transfer_experiment(d.cnn_t, d.cnn_f, d.test_t, cfg);
  d.fgsm_direct = tr.surrogate_report.accuracy;
  d.fgsm_transfer = tr.target_report.accuracy;
  const double drop = d.cnn_t_clean - d.fgsm_direct;
  char detail[160];
  std::snprintf(detail, sizeof(detail), "clean %.4f -> attacked %.4f, drop %.4f",
                d.cnn_t_clean, d.fgsm_direct, drop);
  report(5, "exhausted-budget FGSM drops CNN-IQ accuracy by >= 0.40",
         drop >= 0.40, detail);
}

void criterion_transfer_mitigation(Desk& d) {
  AttackConfig cfg;
  cfg.method = AttackMethod::BIM;
  cfg.power_budget = Desk::kBudget;
  cfg.convention = Desk::kConv;
  cfg.iterations = 10;
  cfg.alpha = cfg.effective_radius() / cfg.iterations;  // exhausts the budget
  TransferResult tr = transfer_experiment(d.cnn_t, d.cnn_f, d.test_t, cfg);
  d.bim_direct = tr.surrogate_report.accuracy;
  d.bim_transfer = tr.target_report.accuracy;

  const double fgsm_gap = d.fgsm_transfer - d.fgsm_direct;
  const double bim_gap = d.bim_transfer - d.bim_direct;
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "fgsm gap %.4f (freq %.4f vs iq %.4f); bim gap %.4f (freq "
                "%.4f vs iq %.4f)",
                fgsm_gap, d.fgsm_transfer, d.fgsm_direct, bim_gap,
                d.bim_transfer, d.bim_direct);
  report(6, "frequency model beats attacked IQ model by >= 0.20 (FGSM and BIM)",
         fgsm_gap >= 0.20 && bim_gap >= 0.20, detail);
}

void criterion_bim_potency(Desk& d) {
  char detail[120];
  std::snprintf(detail, sizeof(detail), "bim %.4f vs fgsm %.4f", d.bim_direct,
                d.fgsm_direct);
  report(7, "BIM at equal exhausted budget is at least as potent as FGSM",
         d.bim_direct <= d.fgsm_direct + 0.02, detail);
}

void criterion_coincidence(Desk& d) {
  double max_diff = 0;
  const double r = AttackConfig{AttackMethod::FGSM, Desk::kBudget, 0, 1,
                                Desk::kConv}
                       .effective_radius();
  for (int i = 0; i < 100; ++i) {
    const Frame& x = d.test_t.frames[i];
    const int y = d.test_t.labels[i];
    Frame a = fgsm(d.cnn_t, x, y, Desk::kBudget, Desk::kConv);
    Frame b = bim(d.cnn_t, x, y, Desk::kBudget, r, 1, Desk::kConv);
    max_diff = std::max(
        max_diff, (a - b).cast<double>().cwiseAbs().maxCoeff());
  }
  char detail[100];
  std::snprintf(detail, sizeof(detail), "max per-sample diff %.2e", max_diff);
  report(8, "1-iteration BIM with alpha = radius equals FGSM", max_diff < 1e-7,
         detail);
}

void criterion_budget_audit(Desk& d) {
  // full FGSM sweep grid; every frame must respect the effective radius
  bool ok = true;
  double worst_excess = 0;
  std::size_t audited = 0;
  for (int step = 0; step <= 10; ++step) {
    const double budget = Desk::kBudget * step / 10.0;
    AttackConfig cfg;
    cfg.method = AttackMethod::FGSM;
    cfg.power_budget = budget;
    cfg.convention = Desk::kConv;
    const double r = cfg.effective_radius();
    Dataset adv = perturb_dataset(d.cnn_t, d.test_t, cfg);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const double norm =
          (adv.frames[i] - d.test_t.frames[i]).cast<double>().norm();
      worst_excess = std::max(worst_excess, norm - r);
      ok = ok && norm <= r + 1e-6;
      ++audited;
    }
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "%zu frames audited, worst excess over radius %.2e", audited,
                worst_excess);
  report(9, "all perturbed frames satisfy the l2 budget across the sweep", ok,
         detail);
}

// ---- criterion 10: CLI pipeline determinism ----

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

void criterion_determinism() {
#ifndef AMC_CLI_PATH
  report(10, "CLI pipeline determinism", false, "CLI path not configured");
  return;
#else
  const fs::path base = fs::temp_directory_path() / "amc_accept_det";
  std::error_code ec;
  fs::remove_all(base, ec);
  bool ok = true;
  std::string detail = "gen/train/attack/eval byte-identical across reruns";
  for (const char* runname : {"a", "b"}) {
    const fs::path dir = base / runname;
    fs::create_directories(dir);
    std::ostringstream cmds;
    const std::string cli = AMC_CLI_PATH;
    const std::string d = dir.string();
    auto sh = [&](const std::string& cmd) {
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        detail = "command failed: " + cmd;
      }
    };
    sh(cli + " --deterministic gen --per-class 40 --frame-len 128 --seed 5 -o " +
       d + "/d.amcd > /dev/null");
    sh(cli + " --deterministic train --arch fcnn --domain time --data " + d +
       "/d.amcd --epochs 3 --seed 5 -o " + d + "/m.ckpt > /dev/null");
    sh(cli + " --deterministic attack --method fgsm --budget 0.02 --model " +
       d + "/m.ckpt --data " + d + "/d.amcd --subset test --split-seed 5 -o " +
       d + "/adv.amcd > /dev/null");
    sh(cli + " --deterministic eval --model " + d + "/m.ckpt --data " + d +
       "/adv.amcd -o " + d + "/report.json > /dev/null");
  }
  for (const char* f : {"d.amcd", "m.ckpt", "adv.amcd", "report.json"}) {
    if (slurp(base / "a" / f) != slurp(base / "b" / f) ||
        slurp(base / "a" / f).empty()) {
      ok = false;
      detail = std::string("mismatch or empty output: ") + f;
    }
  }
  fs::remove_all(base, ec);
  report(10, "repeated gen+train+attack+eval is byte-identical", ok, detail);
#endif
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_dft();
  criterion_gradients();
  criterion_softmax_loss();

  std::printf("---- training desk-scale models (1500/class, 40 epochs) ----\n");
  std::fflush(stdout);
  Desk desk;
  std::printf("---- models trained in %.0f s ----\n", seconds_since(t0));
  std::fflush(stdout);

  criterion_clean_accuracy(desk);
  criterion_attack_effectiveness(desk);
  criterion_transfer_mitigation(desk);
  criterion_bim_potency(desk);
  criterion_coincidence(desk);
  criterion_budget_audit(desk);
  criterion_determinism();

  std::printf("%d criterion(s) failed; total runtime %.0f s\n", failures,
              seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
