// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rankforge/accuracy.hpp"
#include "rankforge/baselines.hpp"
#include "rankforge/cost.hpp"
#include "rankforge/frontier.hpp"
#include "rankforge/lowrank.hpp"
#include "rankforge/search.hpp"
#include "rankforge/trace.hpp"

using namespace rankforge;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string data(const char* name) { return std::string(RANKFORGE_DATA_DIR) + "/" + name; }

CostModel linear_cost(const std::vector<std::int64_t>& coefficients) {
  CostModel cm;
  for (std::size_t i = 0; i < coefficients.size(); ++i) cm.optimized_layers.push_back(i);
  cm.coefficients = coefficients;
  return cm;
}

void alexnet_costs() {
  const auto t0 = Clock::now();
  const auto m = load_model(data("alexnet.json"));
  const double conv_ops = original_share(m, CostTarget::kOperations).conv_fraction();
  const double fc_params = original_share(m, CostTarget::kParameters).fc_fraction();
  const double secs = seconds_since(t0);
  const bool ok = std::abs(conv_ops - 0.919) <= 0.005 && std::abs(fc_params - 0.962) <= 0.005 &&
                  secs < 1.0;
  report("alexnet-cost-shares", ok,
         fmt("conv ops %.2f%%, fc params %.2f%%, %.3f s", 100 * conv_ops, 100 * fc_params,
             secs));
}

void vgg_costs() {
  const auto t0 = Clock::now();
  const auto m = load_model(data("vgg16.json"));
  const double original = static_cast<double>(original_total(m, CostTarget::kOperations));
  const auto cm = build_cost_model(m, CostTarget::kOperations, LayerSelection::kAllKernelLayers);
  const auto space = make_constraints(max_rank_set(m, cm), 0.01, 0.1);
  const double target = 3837e6;
  auto ranks = scaled_cost_rank_set(
      cm, space, (target - cm.fixed_cost) / static_cast<double>(cm.variable_cost(space.max_init)));
  // Scaling rounds every layer down; top up one rank at a time.
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t l = 0; l < ranks.size(); ++l) {
      if (ranks[l] < space.max_init[l] &&
          static_cast<double>(cm.cost(ranks) + cm.coefficients[l]) <= target) {
        ++ranks.values[l];
        grew = true;
      }
    }
  }
  const auto rep = cost_report(m, cm, ranks);
  const double cost = static_cast<double>(rep.total_ops);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(original / 15'530e6 - 1.0) <= 0.02 &&
                  std::abs(cost - target) <= 0.001 * target &&
                  std::abs(rep.speedup() - 4.03) <= 0.01 && secs < 1.0;
  report("vgg16-cost-and-speedup", ok,
         fmt("original %.0f M MACs, config %.1f M -> x%.3f, %.3f s", original / 1e6, cost / 1e6,
             rep.speedup(), secs));
}

void max_rank_tightness() {
  std::mt19937_64 rng(2024);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    LayerSpec l;
    l.name = "x";
    l.window = 1 + static_cast<std::int64_t>(rng() % 11);
    l.in_channels = 1 + static_cast<std::int64_t>(rng() % 2048);
    l.out_channels = 1 + static_cast<std::int64_t>(rng() % 2048);
    l.scheme = rng() % 2 ? Scheme::kSpatial : Scheme::kChannel;
    const auto original = l.window * l.window * l.in_channels * l.out_channels;
    const auto r = max_rank_bound(l);
    if (layer_params(l, r) > original || layer_params(l, r + 1) <= original) ++violations;
  }
  report("max-rank-tightness", violations == 0,
         fmt("1000 shapes, %.0f violations", violations));
}

void svd_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  double worst_recon = 0, worst_tail = 0, worst_sigma = 0;
  for (int i = 0; i < 100; ++i) {
    Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 511);
    Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 511);
    if (i == 0) m = n = 512;
    Matrix a(m, n);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = nd(rng);
    const auto s = svd(a);
    const Matrix back = s.u * s.singular_values.asDiagonal() * s.v.transpose();
    worst_recon = std::max(worst_recon, (back - a).norm() / a.norm());

    const Matrix gram = m >= n ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    Vector oracle = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(oracle.data(), oracle.data() + oracle.size(), std::greater<>());
    worst_sigma = std::max(worst_sigma, (oracle - s.singular_values).cwiseAbs().maxCoeff() /
                                            oracle(0));

    const Rank r = 1 + static_cast<Rank>(rng() % static_cast<std::uint64_t>(std::min(m, n)));
    double tail = 0;
    for (Eigen::Index k = r; k < oracle.size(); ++k) tail += oracle(k) * oracle(k);
    const auto dl = decompose(s, r);
    const double err = (dl.first * dl.second - a).squaredNorm();
    const double scale = std::max(tail, 1e-300);
    if (tail > 1e-12 * a.squaredNorm()) worst_tail = std::max(worst_tail, std::abs(err - tail) / scale);
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_recon <= 1e-6 && worst_tail <= 1e-6 && worst_sigma <= 1e-6 && secs < 60;
  report("svd-suite", ok,
         fmt("recon %.1e, tail %.1e, sigma vs eigensolver %.1e, %.1f s", worst_recon, worst_tail,
             worst_sigma, secs));
}

void frontier_checks() {
  std::mt19937_64 rng(5150);
  int disagreements = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    RejectionFrontier f;
    std::vector<RankSet> boxes;
    for (int op = 0; op < 10'000; ++op) {
      RankSet r;
      for (std::size_t l = 0; l < n; ++l) r.values.push_back(1 + static_cast<Rank>(rng() % 20));
      if (rng() % 4 == 0) {
        f.insert(r);
        boxes.push_back(r);
        continue;
      }
      bool naive = false;
      for (const auto& b : boxes) {
        bool inside = true;
        for (std::size_t l = 0; l < n; ++l) inside &= r[l] <= b[l];
        naive |= inside;
      }
      disagreements += naive != f.contains(r);
    }
  }

  // Monotone oracle on a 15^3 grid: every set the search pruned is infeasible.
  const RankSet max({15, 15, 15});
  const auto cm = linear_cost({7, 3, 2});
  auto oracle = [](const RankSet& r) {
    return std::pow(r[0] / 15.0, 0.3) * std::pow(r[1] / 15.0, 0.2) * std::pow(r[2] / 15.0, 0.1);
  };
  const double tau = 0.7;
  std::mutex mu;
  std::vector<ScoredRankSet> seen;
  FunctionEvaluator recording([&](const RankSet& r, Stage) {
    const double a = oracle(r);
    std::lock_guard lock(mu);
    seen.push_back({r, a});
    return a;
  });
  SearchConfig cfg;
  cfg.seed = 1;
  run_stage1(cm, max, tau, recording, cfg);
  RejectionFrontier pruned;
  reject_and_update(pruned, seen, tau);
  int wrongly_pruned = 0, pruned_points = 0;
  for (Rank a = 1; a <= 15; ++a)
    for (Rank b = 1; b <= 15; ++b)
      for (Rank c = 1; c <= 15; ++c) {
        const RankSet r({a, b, c});
        if (!pruned.contains(r)) continue;
        ++pruned_points;
        wrongly_pruned += oracle(r) > tau;
      }
  report("rejection-frontier", disagreements == 0 && wrongly_pruned == 0,
         fmt("%.0f disagreements over 5x10^4 ops, %.0f of %.0f pruned grid points feasible",
             disagreements, wrongly_pruned, pruned_points));
}

struct Instance {
  CostModel cm;
  RankSet max;
  std::vector<double> weights;
  double tau = 0;
};

double instance_accuracy(const Instance& in, const RankSet& r) {
  double s = 0;
  for (std::size_t l = 0; l < r.size(); ++l) {
    s += in.weights[l] * std::log(static_cast<double>(r[l]) / static_cast<double>(in.max[l]));
  }
  return std::exp(s);
}

void search_quality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(31337);
  int within = 0, not_worse = 0, total = 0;
  for (int inst = 0; inst < 50; ++inst) {
    Instance in;
    const std::size_t n = 3 + inst % 3;
    const Rank bound = n == 3 ? 46 : n == 4 ? 17 : 10;
    std::vector<std::int64_t> coeff;
    double log_tau = 0;
    for (std::size_t l = 0; l < n; ++l) {
      in.max.values.push_back(8 + static_cast<Rank>(rng() % static_cast<std::uint64_t>(bound - 7)));
      coeff.push_back(1 + static_cast<std::int64_t>(rng() % 100));
      in.weights.push_back(0.05 + 0.45 * static_cast<double>(rng() % 1000) / 1000.0);
      log_tau += in.weights.back() * std::log(0.3 + 0.5 * static_cast<double>(rng() % 1000) / 1000.0);
    }
    in.cm = linear_cost(coeff);
    in.tau = std::exp(log_tau);
    FunctionEvaluator f([&in](const RankSet& r, Stage) { return instance_accuracy(in, r); });
    SearchConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(inst);
    const auto trace = run_stage1(in.cm, in.max, in.tau, f, cfg);
    const auto space = make_constraints(in.max, cfg.delta_s, cfg.delta_m);
    BruteForceOptions grid;
    grid.step = space.step;
    const auto brute = brute_force(in.cm, space.min, space.max_init, f, in.tau, grid);
    const auto greedy = layerwise_greedy(in.cm, space, f, in.tau);
    if (!brute.found()) continue;
    ++total;
    const auto r = trace.final_ranks();
    const auto cost = in.cm.cost(r);
    const bool feasible = instance_accuracy(in, r) > in.tau || trace.accepted().empty();
    if (feasible && static_cast<double>(cost) <= 1.10 * static_cast<double>(brute.cost)) ++within;
    if (feasible && (!greedy.found() || cost <= greedy.cost)) ++not_worse;
  }

  // Coupled fixture: accuracy loss favours shrinking the cheap layer.
  const auto cm = linear_cost({1, 10});
  FunctionEvaluator coupled([](const RankSet& r, Stage) {
    return 1.0 - 0.01 * double(100 - r[0]) - 0.02 * double(100 - r[1]);
  });
  const double tau = 0.595;
  const auto space = make_constraints(RankSet({100, 100}), 0.01, 0.1);
  const auto b = brute_force(cm, space.min, space.max_init, coupled, tau);
  const auto g = layerwise_greedy(cm, space, coupled, tau);
  SearchConfig wide;
  wide.sigma = 5;
  const auto t = run_stage1(cm, RankSet({100, 100}), tau, coupled, wide);
  const bool coupled_ok = cm.cost(t.final_ranks()) == b.cost && g.cost > b.cost;

  const double secs = seconds_since(t0);
  const bool ok = total == 50 && within >= 40 && not_worse >= 35 && coupled_ok && secs < 600;
  std::ostringstream d;
  d << within << "/" << total << " within 1.10x of optimum, " << not_worse << "/" << total
    << " <= greedy; coupled: model-wise " << cm.cost(t.final_ranks()) << ", optimum " << b.cost
    << ", greedy " << g.cost << "; " << fmt("%.1f s", secs);
  report("search-quality", ok, d.str());
}

void mechanics() {
  const auto m = load_model(data("alexnet.json"));
  const auto cm = build_cost_model(m, CostTarget::kOperations, LayerSelection::kAllKernelLayers);
  const auto max = max_rank_set(m, cm);
  SyntheticOracle oracle(max);
  SearchConfig cfg;
  cfg.seed = 11;
  cfg.delta_r = 0.05;
  const double tau = 0.93;
  const auto space = make_constraints(max, cfg.delta_s, cfg.delta_m);

  // Candidates per round, to check they stay inside the shrinking box.
  std::mutex mu;
  std::vector<std::vector<RankSet>> rounds(1);
  FunctionEvaluator recording([&](const RankSet& r, Stage s) {
    std::lock_guard lock(mu);
    rounds.back().push_back(r);
    return oracle.evaluate(r, s);
  });
  const auto trace = run_stage1(cm, max, tau, recording, cfg,
                                [&](const IterationRecord&) { rounds.emplace_back(); });

  bool halving = true, decreasing = true, box = true;
  int sub_tau = 0;
  std::int64_t last_cost = trace.start_cost;
  RankSet current = trace.start;
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& rec = trace.iterations[i];
    for (const auto& cand : rounds[i]) {
      for (std::size_t l = 0; l < cand.size(); ++l) {
        const Rank cap = std::max<Rank>(space.step[l],
                                        static_cast<Rank>(std::floor(2 * cfg.delta_r * current[l] + 1e-9)));
        box &= cand[l] <= current[l] && cand[l] >= space.min[l] && current[l] - cand[l] <= cap;
      }
    }
    if (rec.accepted) {
      decreasing &= rec.cost < last_cost;
      last_cost = rec.cost;
      current = rec.ranks;
    } else {
      ++sub_tau;
    }
    if (i + 1 < trace.iterations.size()) {
      const auto expect = rec.accepted ? rec.delta_c : rec.delta_c / 2;
      halving &= trace.iterations[i + 1].delta_c == expect;
    }
  }
  std::ostringstream a, b;
  write_trace(trace, a);
  write_trace(run_stage1(cm, max, tau, oracle, cfg), b);
  const bool identical = a.str() == b.str();
  std::ostringstream d;
  d << trace.iterations.size() << " rounds, " << trace.accepted().size() << " accepted, " << sub_tau
    << " halvings; halving " << (halving ? "ok" : "broken") << ", costs "
    << (decreasing ? "decreasing" : "not decreasing") << ", box " << (box ? "ok" : "violated")
    << ", trace " << (identical ? "identical" : "differs");
  report("algorithm-mechanics", halving && decreasing && box && identical && sub_tau > 0, d.str());
}

void accuracy_chain() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double worst = 0;
  int fitted = 0;
  for (int i = 0; i < 100; ++i) {
    EvalPoint p{u(rng), u(rng), u(rng), u(rng)};
    EvalPoint q{p.acc0 + 0.01 + 0.2 * u(rng), *p.acc02 + 0.01 + 0.2 * u(rng),
                *p.acc1 + 0.01 + 0.2 * u(rng), *p.acc_final + 0.01 + 0.2 * u(rng)};
    std::vector<EvalPoint> pts = {p, q};
    const double mu = u(rng);
    const auto m = fit_accuracy_model(pts, mu);
    worst = std::max(worst, std::abs(m.to_final(m.to_1(m.to_02(m.tau_a))) - mu));
    ++fitted;
  }
  report("accuracy-chain", fitted == 100 && worst <= 1e-9,
         fmt("%.0f calibrations, max error %.1e", fitted, worst));
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void()>> checks[] = {
      {"alexnet-cost-shares", alexnet_costs}, {"vgg16-cost-and-speedup", vgg_costs},
      {"max-rank-tightness", max_rank_tightness}, {"svd-suite", svd_suite},
      {"rejection-frontier", frontier_checks}, {"search-quality", search_quality},
      {"algorithm-mechanics", mechanics}, {"accuracy-chain", accuracy_chain}};
  for (const auto& [name, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(name, false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
