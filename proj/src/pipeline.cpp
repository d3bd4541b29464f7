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

#include "rankforge/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rankforge/cost.hpp"
#include "rankforge/error.hpp"
#include "rankforge/lowrank.hpp"
#include "rankforge/trace.hpp"

namespace rankforge {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr const char* kRankFormat = "rankforge-ranks";
constexpr const char* kDecomposedFormat = "rankforge-decomposed";

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorKind::kParse, path.string() + " is not valid JSON");
  }
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::string blob_name(const std::string& layer) {
  std::string out;
  for (char c : layer) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out + ".bin";
}

// Owns the evaluator it wraps with a cache journal.
class OwningCache : public Evaluator {
 public:
  OwningCache(std::unique_ptr<Evaluator> inner, fs::path journal)
      : inner_(std::move(inner)), cache_(*inner_, std::move(journal)) {}
  double evaluate(const RankSet& ranks, Stage stage) override {
    return cache_.evaluate(ranks, stage);
  }
  std::size_t max_concurrency() const override {
    return cache_.max_concurrency();
  }

 private:
  std::unique_ptr<Evaluator> inner_;
  CachingEvaluator cache_;
};

ojson map_json(const AffineMap& m) {
  ojson j;
  j["slope"] = m.slope;
  j["intercept"] = m.intercept;
  return j;
}

AffineMap map_from(const json& j) {
  return {j.at("slope").get<double>(), j.at("intercept").get<double>()};
}

RankSet half_cost_fallback(const CostModel& cm, const RankSet& max_init,
                           const SearchConfig& search) {
  const auto space = make_constraints(max_init, search.delta_s, search.delta_m);
  return scaled_cost_rank_set(cm, space, 0.5);
}

ojson named_json(const NamedRanks& ranks) {
  ojson arr = ojson::array();
  for (const auto& [name, rank] : ranks.entries) {
    ojson e;
    e["layer"] = name;
    e["rank"] = rank;
    arr.push_back(std::move(e));
  }
  return arr;
}

void write_stage2(const Stage2Result& r, const NetworkModel& model,
                  const CostModel& cm, const fs::path& path) {
  ojson j;
  j["fallback"] = r.fallback;
  j["iteration"] = r.iteration ? ojson(*r.iteration) : ojson(nullptr);
  j["cost"] = cm.cost(r.ranks);
  j["ranks"] = named_json(name_ranks(model, cm, r.ranks));
  ojson checks = ojson::array();
  for (const auto& c : r.checks) {
    ojson e;
    e["iteration"] = c.iteration;
    e["acc02"] = c.acc02;
    e["acc1"] = c.acc1 ? ojson(*c.acc1) : ojson(nullptr);
    e["passed"] = c.passed;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  write_text(path, j.dump(2) + "\n");
}

CostModel cost_model_for(const NetworkModel& model, const RunConfig& config) {
  return build_cost_model(model, config.target, config.layers);
}

CostModel cost_model_for_trace(const NetworkModel& model, const SearchTrace& trace) {
  std::vector<std::size_t> idx;
  for (const auto& name : trace.layer_names) {
    const auto i = model.find_layer(name);
    if (!i) {
      throw Error(ErrorKind::kValidation,
                  "trace layer '" + name + "' is not in the model");
    }
    idx.push_back(*i);
  }
  return build_cost_model(model, parse_cost_target(trace.target), idx);
}

Stage2Result stage2_or_fallback(const SearchTrace& trace,
                                const AccuracyModel& accuracy,
                                Evaluator& evaluator, const RankSet& fallback) {
  if (trace.accepted().empty()) {
    Stage2Result r;
    r.ranks = fallback;
    r.fallback = true;
    return r;
  }
  return run_stage2(trace, accuracy, evaluator, fallback);
}

}  // namespace

PlanSummary plan(const NetworkModel& model, const RunConfig& config) {
  validate_model(model);
  const CostModel cm = cost_model_for(model, config);
  const SearchInit init = init_search(model, cm, config.search);
  PlanSummary s;
  s.target = cm.target;
  for (std::size_t l = 0; l < cm.size(); ++l) {
    const auto& layer = model.layers[cm.optimized_layers[l]];
    s.rows.push_back({layer.name, layer.scheme, init.space.max_init[l],
                      init.space.min[l], init.space.step[l], cm.coefficients[l]});
  }
  s.c_max = init.c_max;
  s.fixed_cost = cm.fixed_cost;
  s.delta_c0 = init.delta_c0;
  s.delta_c_min = init.plan.delta_c_min;
  s.sigma = init.plan.sigma;
  s.original_total = original_total(model, cm.target);
  return s;
}

std::string to_json(const PlanSummary& s) {
  ojson j;
  j["target"] = to_string(s.target);
  ojson rows = ojson::array();
  for (const auto& r : s.rows) {
    ojson e;
    e["layer"] = r.name;
    e["scheme"] = to_string(r.scheme);
    e["max_rank"] = r.max_rank;
    e["min_rank"] = r.min_rank;
    e["step"] = r.step;
    e["unit_cost"] = r.coefficient;
    rows.push_back(std::move(e));
  }
  j["layers"] = std::move(rows);
  j["c_max"] = s.c_max;
  j["fixed_cost"] = s.fixed_cost;
  j["delta_c0"] = s.delta_c0;
  j["delta_c_min"] = s.delta_c_min;
  j["sigma"] = s.sigma;
  j["original_total"] = s.original_total;
  return j.dump(2);
}

std::optional<Rank> NamedRanks::find(const std::string& name) const {
  for (const auto& [n, r] : entries) {
    if (n == name) return r;
  }
  return std::nullopt;
}

void write_rank_file(const NamedRanks& ranks, const fs::path& path) {
  ojson j;
  j["format"] = kRankFormat;
  j["ranks"] = named_json(ranks);
  write_text(path, j.dump(2) + "\n");
}

NamedRanks read_rank_file(const fs::path& path) {
  const json doc = read_json_file(path);
  NamedRanks out;
  try {
    for (const auto& e : doc.at("ranks")) {
      const auto name = e.at("layer").get<std::string>();
      const auto rank = e.at("rank").get<Rank>();
      if (rank < 1) {
        throw Error(ErrorKind::kValidation,
                    "rank file: layer '" + name + "' has rank < 1");
      }
      if (out.find(name)) {
        throw Error(ErrorKind::kValidation,
                    "rank file: layer '" + name + "' listed twice");
      }
      out.entries.emplace_back(name, rank);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return out;
}

NamedRanks name_ranks(const NetworkModel& model, const CostModel& cm,
                      const RankSet& ranks) {
  if (ranks.size() != cm.size()) {
    throw Error(ErrorKind::kInvalidArgument, "rank set is misaligned");
  }
  NamedRanks out;
  for (std::size_t l = 0; l < cm.size(); ++l) {
    out.entries.emplace_back(model.layers[cm.optimized_layers[l]].name, ranks[l]);
  }
  return out;
}

std::unique_ptr<Evaluator> resolve_evaluator(const NetworkModel& model,
                                             const CostModel& cm,
                                             const RunConfig& config) {
  EvaluatorConfig ec = config.evaluator;
  ec.seed = config.search.seed;
  if (ec.command.empty()) {
    if (const char* env = std::getenv("RANKFORGE_EVALUATOR"); env && *env) {
      ec.command = env;
    }
  }
  if (config.evaluator_kind) {
    ec.kind = *config.evaluator_kind;
  } else if (!ec.command.empty()) {
    ec.kind = EvaluatorKind::kExternalProcess;
  } else {
    bool all_weights = true;
    for (auto idx : cm.optimized_layers) all_weights &= model.has_weights(idx);
    ec.kind = all_weights ? EvaluatorKind::kPcaEnergyProxy
                          : EvaluatorKind::kSyntheticOracle;
  }
  auto inner = make_evaluator(ec, model, cm);
  std::string journal = config.eval_cache;
  if (journal.empty() && ec.kind == EvaluatorKind::kExternalProcess) {
    journal = (fs::path(config.out) / "eval_cache.jsonl").string();
  }
  if (journal.empty() || journal == "none") return inner;
  if (fs::path(journal).has_parent_path()) {
    std::error_code err;
    fs::create_directories(fs::path(journal).parent_path(), err);
  }
  return std::make_unique<OwningCache>(std::move(inner), journal);
}

AccuracyModel resolve_accuracy_model(const NetworkModel& model,
                                     const CostModel& cm,
                                     const RunConfig& config,
                                     Evaluator& evaluator) {
  AccuracyModel m;
  if (config.tau_a) {
    m = threshold_only_model(*config.tau_a);
  } else if (!config.calibration.empty()) {
    if (!config.mu_star) {
      throw Error(ErrorKind::kInvalidArgument,
                  "a calibration file needs a target accuracy (mu_star)");
    }
    const json doc = read_json_file(config.calibration);
    std::vector<EvalPoint> points;
    try {
      for (const auto& p : doc.at("points")) {
        EvalPoint e;
        e.acc0 = p.at("acc0").get<double>();
        if (p.contains("acc02")) e.acc02 = p.at("acc02").get<double>();
        if (p.contains("acc1")) e.acc1 = p.at("acc1").get<double>();
        if (p.contains("acc_final")) e.acc_final = p.at("acc_final").get<double>();
        points.push_back(e);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, config.calibration + ": " + e.what());
    }
    m = fit_accuracy_model(points, *config.mu_star);
  } else if (config.mu_star) {
    const RankSet max_init = max_rank_set(model, cm);
    const RankSet half = half_cost_fallback(cm, max_init, config.search);
    std::vector<EvalPoint> points;
    for (const RankSet* r : {&max_init, &half}) {
      EvalPoint e;
      e.acc0 = evaluator.evaluate(*r, Stage::kScore0);
      e.acc02 = evaluator.evaluate(*r, Stage::kFinetune02);
      e.acc1 = evaluator.evaluate(*r, Stage::kFinetune1);
      e.acc_final = evaluator.evaluate(*r, Stage::kFinal);
      points.push_back(e);
    }
    m = fit_accuracy_model(points, *config.mu_star);
  } else {
    throw Error(ErrorKind::kInvalidArgument,
                "no accuracy target: give tau_a, mu_star, or a calibration file");
  }
  if (config.tau_b) m.tau_b = *config.tau_b;
  if (config.tau_c) m.tau_c = *config.tau_c;
  return m;
}

void write_accuracy_model(const AccuracyModel& m, const fs::path& path) {
  ojson j;
  j["to_02"] = map_json(m.to_02);
  j["to_1"] = map_json(m.to_1);
  j["to_final"] = map_json(m.to_final);
  j["tau_a"] = m.tau_a;
  j["tau_b"] = m.tau_b;
  j["tau_c"] = m.tau_c;
  j["target_accuracy"] = m.target_accuracy;
  write_text(path, j.dump(2) + "\n");
}

AccuracyModel read_accuracy_model(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    AccuracyModel m;
    m.to_02 = map_from(j.at("to_02"));
    m.to_1 = map_from(j.at("to_1"));
    m.to_final = map_from(j.at("to_final"));
    m.tau_a = j.at("tau_a").get<double>();
    m.tau_b = j.at("tau_b").get<double>();
    m.tau_c = j.at("tau_c").get<double>();
    m.target_accuracy = j.at("target_accuracy").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

SearchOutcome run_search(const NetworkModel& model, const RunConfig& config) {
  validate_model(model);
  const CostModel cm = cost_model_for(model, config);
  const RankSet max_init = max_rank_set(model, cm);
  auto evaluator = resolve_evaluator(model, cm, config);
  const AccuracyModel accuracy =
      resolve_accuracy_model(model, cm, config, *evaluator);

  const fs::path out(config.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  write_accuracy_model(accuracy, out / "accuracy_model.json");

  std::vector<std::string> names;
  for (auto idx : cm.optimized_layers) names.push_back(model.layers[idx].name);

  const SearchInit init = init_search(cm, max_init, config.search);
  SearchTrace header;
  header.seed = config.search.seed;
  header.layer_names = names;
  header.target = std::string(to_string(cm.target));
  header.tau_a = accuracy.tau_a;
  header.c_max = init.c_max;
  header.delta_c0 = init.delta_c0;
  header.delta_c_min = init.plan.delta_c_min;
  header.start = init.start;
  header.start_cost = cm.cost(init.start);

  SearchOutcome outcome;
  outcome.trace_path = out / "trace.jsonl";
  SearchTrace trace;
  {
    TraceWriter writer(outcome.trace_path, header);
    trace = run_stage1(cm, max_init, accuracy.tau_a, *evaluator, config.search,
                       [&](const IterationRecord& r) { writer.append(r); });
  }
  trace.layer_names = names;

  const RankSet stage1 = trace.final_ranks();
  write_rank_file(name_ranks(model, cm, stage1), out / "stage1_ranks.json");
  outcome.accepted = trace.accepted().size();

  RankSet final_ranks = stage1;
  if (config.stage2) {
    const auto result = stage2_or_fallback(
        trace, accuracy, *evaluator, half_cost_fallback(cm, max_init, config.search));
    write_stage2(result, model, cm, out / "stage2.json");
    final_ranks = result.ranks;
    outcome.stage2_run = true;
    outcome.fallback = result.fallback;
  }
  outcome.ranks_path = out / "final_ranks.json";
  write_rank_file(name_ranks(model, cm, final_ranks), outcome.ranks_path);
  outcome.final_cost = cm.cost(final_ranks);
  return outcome;
}

SearchOutcome run_stage2_from_files(const NetworkModel& model,
                                    const RunConfig& config) {
  validate_model(model);
  const fs::path out(config.out);
  SearchOutcome outcome;
  outcome.trace_path = out / "trace.jsonl";
  const SearchTrace trace = read_trace(outcome.trace_path);
  const CostModel cm = cost_model_for_trace(model, trace);
  const AccuracyModel accuracy = read_accuracy_model(out / "accuracy_model.json");
  RunConfig cfg = config;
  cfg.search.seed = trace.seed;
  auto evaluator = resolve_evaluator(model, cm, cfg);
  const auto result =
      stage2_or_fallback(trace, accuracy, *evaluator,
                         half_cost_fallback(cm, max_rank_set(model, cm), config.search));
  write_stage2(result, model, cm, out / "stage2.json");
  outcome.ranks_path = out / "final_ranks.json";
  write_rank_file(name_ranks(model, cm, result.ranks), outcome.ranks_path);
  outcome.accepted = trace.accepted().size();
  outcome.final_cost = cm.cost(result.ranks);
  outcome.stage2_run = true;
  outcome.fallback = result.fallback;
  return outcome;
}

void decompose_model(const NetworkModel& model, const NamedRanks& ranks,
                     const fs::path& out_path) {
  validate_model(model);
  for (const auto& [name, rank] : ranks.entries) {
    if (!model.find_layer(name)) {
      throw Error(ErrorKind::kValidation,
                  "rank file names unknown layer '" + name + "'");
    }
  }
  const std::string blob_dir = out_path.stem().string() + "_weights";
  const fs::path base = out_path.has_parent_path() ? out_path.parent_path() : ".";
  std::error_code ec;
  fs::create_directories(base / blob_dir, ec);

  ojson doc;
  doc["format"] = kDecomposedFormat;
  doc["version"] = 1;
  ojson layers = ojson::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    if (!model.has_weights(i)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "layer '" + layer.name + "' has no weights to decompose");
    }
    const Matrix k = model.weights[i]->cast<double>();
    const Rank full = std::min<Rank>(k.rows(), k.cols());
    const Rank rank = ranks.find(layer.name).value_or(max_rank(layer));
    if (rank < 1 || rank > full) {
      throw Error(ErrorKind::kValidation,
                  "layer '" + layer.name + "': rank " + std::to_string(rank) +
                      " outside [1, " + std::to_string(full) + "]");
    }
    const DecomposedLayer dl = decompose(k, rank, layer.scheme);
    const auto d = layer.window;
    for (int part = 1; part <= 2; ++part) {
      const std::string name = layer.name + "." + std::to_string(part);
      const Matrix& m = part == 1 ? dl.first : dl.second;
      ojson e;
      e["name"] = name;
      e["source"] = layer.name;
      e["part"] = part;
      e["rank"] = rank;
      e["kind"] = to_string(layer.kind);
      if (layer.scheme == Scheme::kSpatial) {
        e["window"] = part == 1 ? std::vector<std::int64_t>{d, 1}
                                : std::vector<std::int64_t>{1, d};
      } else {
        e["window"] = part == 1 ? std::vector<std::int64_t>{d, d}
                                : std::vector<std::int64_t>{1, 1};
      }
      e["in_channels"] = part == 1 ? layer.in_channels : rank;
      e["out_channels"] = part == 1 ? rank : layer.out_channels;
      e["shape"] = {m.rows(), m.cols()};
      const auto rel = fs::path(blob_dir) / blob_name(name);
      write_weight_blob(m.cast<float>(), base / rel);
      e["weights"] = rel.generic_string();
      layers.push_back(std::move(e));
    }
  }
  doc["layers"] = std::move(layers);
  write_text(out_path, doc.dump(2) + "\n");
}

std::vector<DecomposedEntry> load_decomposed(const fs::path& path) {
  const json doc = read_json_file(path);
  const fs::path base = path.has_parent_path() ? path.parent_path() : ".";
  std::vector<DecomposedEntry> out;
  try {
    if (doc.at("format").get<std::string>() != kDecomposedFormat) {
      throw Error(ErrorKind::kParse, path.string() + " is not a decomposed model");
    }
    for (const auto& e : doc.at("layers")) {
      DecomposedEntry d;
      d.name = e.at("name").get<std::string>();
      d.source = e.at("source").get<std::string>();
      d.part = e.at("part").get<int>();
      d.rank = e.at("rank").get<Rank>();
      d.weights = read_weight_blob(base / e.at("weights").get<std::string>());
      out.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return out;
}

void write_report(const fs::path& trace_path, const fs::path& out_dir,
                  const NetworkModel* model) {
  const SearchTrace trace = read_trace(trace_path);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  {
    std::ostringstream s;
    write_iteration_csv(trace, s);
    write_text(out_dir / "iterations.csv", s.str());
  }
  {
    std::ostringstream s;
    write_accepted_csv(trace, s);
    write_text(out_dir / "accepted.csv", s.str());
  }
  if (model) {
    const CostModel cm = cost_model_for_trace(*model, trace);
    std::ostringstream s;
    write_cost_csv(cost_report(*model, cm, trace.final_ranks()), s);
    write_text(out_dir / "layers.csv", s.str());
  }
}

}  // namespace rankforge
