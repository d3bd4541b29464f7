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

#ifndef RANKFORGE_TRACE_HPP_
#define RANKFORGE_TRACE_HPP_

#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "rankforge/search.hpp"

namespace rankforge {

// Trace journal: JSON lines. The first line is a header record
// ({"type":"header",...}); each following line is one iteration record
// ({"type":"iteration",...}). Records are only ever appended.
std::string header_line(const SearchTrace& trace);
std::string iteration_line(const IterationRecord& record);

void write_trace(const SearchTrace& trace, std::ostream& out);
void write_trace(const SearchTrace& trace, const std::filesystem::path& path);

// Throws Error(kParse) on malformed input. A truncated final line (from an
// interrupted run) is ignored.
SearchTrace read_trace(std::istream& in);
SearchTrace read_trace(const std::filesystem::path& path);

// Creates `path` with the header line, then appends records as produced.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, const SearchTrace& header);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void append(const IterationRecord& record);

 private:
  std::FILE* file_ = nullptr;
};

// Cost-vs-iteration series, one row per iteration.
// Columns: iteration,delta_c,sigma,candidates,rejected,best_score,accepted,
//          cost,cost_fraction
void write_iteration_csv(const SearchTrace& trace, std::ostream& out);
// Accuracy-vs-cost series, one row per accepted set.
// Columns: iteration,cost,cost_fraction,accuracy
void write_accepted_csv(const SearchTrace& trace, std::ostream& out);

inline constexpr const char* kIterationCsvHeader =
    "iteration,delta_c,sigma,candidates,rejected,best_score,accepted,cost,"
    "cost_fraction";
inline constexpr const char* kAcceptedCsvHeader =
    "iteration,cost,cost_fraction,accuracy";

}  // namespace rankforge

#endif  // RANKFORGE_TRACE_HPP_
