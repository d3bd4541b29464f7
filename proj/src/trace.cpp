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

#include "rankforge/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "rankforge/error.hpp"

namespace rankforge {
namespace {

using ojson = nlohmann::ordered_json;

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

RankSet ranks_from(const ojson& j) {
  RankSet r;
  for (const auto& v : j) r.values.push_back(v.get<Rank>());
  return r;
}

}  // namespace

std::string header_line(const SearchTrace& trace) {
  ojson j;
  j["type"] = "header";
  j["seed"] = trace.seed;
  j["layer_names"] = trace.layer_names;
  j["target"] = trace.target;
  j["tau_a"] = trace.tau_a;
  j["c_max"] = trace.c_max;
  j["delta_c0"] = trace.delta_c0;
  j["delta_c_min"] = trace.delta_c_min;
  j["start"] = trace.start.values;
  j["start_cost"] = trace.start_cost;
  return j.dump();
}

std::string iteration_line(const IterationRecord& rec) {
  ojson j;
  j["type"] = "iteration";
  j["iteration"] = rec.iteration;
  j["delta_c"] = rec.delta_c;
  j["sigma"] = rec.sigma;
  j["candidates"] = rec.candidates;
  j["rejected"] = rec.rejected;
  j["best_score"] = rec.best_score ? ojson(*rec.best_score) : ojson(nullptr);
  j["accepted"] = rec.accepted;
  j["ranks"] = rec.ranks.values;
  j["cost"] = rec.cost;
  return j.dump();
}

void write_trace(const SearchTrace& trace, std::ostream& out) {
  out << header_line(trace) << '\n';
  for (const auto& rec : trace.iterations) out << iteration_line(rec) << '\n';
}

void write_trace(const SearchTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  write_trace(trace, out);
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

SearchTrace read_trace(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  bool last_terminated = true;
  while (std::getline(in, line)) {
    last_terminated = !in.eof();
    if (!line.empty()) lines.push_back(line);
  }
  SearchTrace trace;
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ojson j = ojson::parse(lines[i], nullptr, false);
    if (j.is_discarded()) {
      if (i + 1 == lines.size() && !last_terminated && i > 0) break;
      throw Error(ErrorKind::kParse,
                  "trace line " + std::to_string(i + 1) + " is not valid JSON");
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (i == 0) {
        if (type != "header") {
          throw Error(ErrorKind::kParse, "trace does not start with a header");
        }
        trace.seed = j.at("seed").get<std::uint64_t>();
        trace.layer_names = j.at("layer_names").get<std::vector<std::string>>();
        trace.target = j.at("target").get<std::string>();
        trace.tau_a = j.at("tau_a").get<double>();
        trace.c_max = j.at("c_max").get<std::int64_t>();
        trace.delta_c0 = j.at("delta_c0").get<std::int64_t>();
        trace.delta_c_min = j.at("delta_c_min").get<std::int64_t>();
        trace.start = ranks_from(j.at("start"));
        trace.start_cost = j.at("start_cost").get<std::int64_t>();
        have_header = true;
        continue;
      }
      if (type != "iteration") {
        throw Error(ErrorKind::kParse,
                    "unexpected record type '" + type + "' in trace");
      }
      IterationRecord rec;
      rec.iteration = j.at("iteration").get<std::size_t>();
      rec.delta_c = j.at("delta_c").get<std::int64_t>();
      rec.sigma = j.at("sigma").get<std::int64_t>();
      rec.candidates = j.at("candidates").get<std::size_t>();
      rec.rejected = j.at("rejected").get<std::size_t>();
      if (!j.at("best_score").is_null()) {
        rec.best_score = j.at("best_score").get<double>();
      }
      rec.accepted = j.at("accepted").get<bool>();
      rec.ranks = ranks_from(j.at("ranks"));
      rec.cost = j.at("cost").get<std::int64_t>();
      trace.iterations.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse,
                  "trace line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::kParse, "trace is empty");
  return trace;
}

SearchTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return read_trace(in);
}

TraceWriter::TraceWriter(const std::filesystem::path& path,
                         const SearchTrace& header) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const auto line = header_line(header) + "\n";
  std::fwrite(line.data(), 1, line.size(), file_);
  std::fflush(file_);
}

TraceWriter::~TraceWriter() {
  if (file_) std::fclose(file_);
}

void TraceWriter::append(const IterationRecord& record) {
  const auto line = iteration_line(record) + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fflush(file_) != 0) {
    throw Error(ErrorKind::kIo, "failed appending to trace");
  }
}

void write_iteration_csv(const SearchTrace& trace, std::ostream& out) {
  out << kIterationCsvHeader << '\n';
  for (const auto& r : trace.iterations) {
    out << r.iteration << ',' << r.delta_c << ',' << r.sigma << ','
        << r.candidates << ',' << r.rejected << ','
        << (r.best_score ? shortest(*r.best_score) : std::string()) << ','
        << (r.accepted ? 1 : 0) << ',' << r.cost << ','
        << shortest(trace.c_max > 0 ? static_cast<double>(r.cost) /
                                          static_cast<double>(trace.c_max)
                                    : 0.0)
        << '\n';
  }
}

void write_accepted_csv(const SearchTrace& trace, std::ostream& out) {
  out << kAcceptedCsvHeader << '\n';
  for (const auto& a : trace.accepted()) {
    out << a.iteration << ',' << a.cost << ','
        << shortest(trace.c_max > 0 ? static_cast<double>(a.cost) /
                                          static_cast<double>(trace.c_max)
                                    : 0.0)
        << ',' << shortest(a.accuracy) << '\n';
  }
}

}  // namespace rankforge
