// Copyright 2026-present the spdq project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdq/matrix.hpp"

namespace spdq::eval {

/// Normalization of average precision at cutoff R.
///  - total_relevant divides by the database-wide relevant count N, which
///    caps AP below 1 whenever N > R.
///  - min_cap divides by min(N, R), the usual truncated-AP convention.
enum class ApNorm { total_relevant, min_cap };

ApNorm ap_norm_from_name(const std::string& name);  // "total" | "min"
const char* ap_norm_name(ApNorm norm);

/// AP = (1/denominator) * sum_{r=1..R} P(r) * rel(r) over the top R ranks,
/// where P(r) is the precision of the top r. `num_relevant_in_db` must count
/// relevant items in the whole database and be at least 1.
double average_precision(const std::vector<bool>& ranked_relevance,
                         std::size_t num_relevant_in_db, std::size_t r,
                         ApNorm norm = ApNorm::total_relevant);

/// Relevance ground truth: an item is relevant to a query iff they share at
/// least one label.
struct RelevanceJudge {
    const Matrix* query_labels = nullptr;  // num_classes x num_queries
    const Matrix* db_labels = nullptr;     // num_classes x num_db

    bool relevant(std::size_t query, std::size_t db_item) const;
    std::size_t relevant_count(std::size_t query) const;
    std::size_t db_size() const { return db_labels->cols(); }
};

struct MapResult {
    double map = 0.0;
    std::vector<double> per_query_ap;       // one entry per evaluated query
    std::vector<std::size_t> evaluated;     // query indices with >= 1 relevant item
    std::vector<std::size_t> excluded;      // query indices with none
};

/// Mean AP over queries with at least one relevant database item. `rankings`
/// holds, per query, database item indices in ranked order (length >= r).
MapResult map_at_r(const std::vector<std::vector<std::size_t>>& rankings,
                   const RelevanceJudge& judge, std::size_t r = 50,
                   ApNorm norm = ApNorm::total_relevant);

struct PrecisionPoint {
    std::size_t n = 0;
    double precision = 0.0;
};

/// Precision within the top n, averaged over all queries, for each n in the
/// grid. Rankings must reach max(n_grid), which may not exceed the database
/// size.
std::vector<PrecisionPoint> topn_precision(const std::vector<std::vector<std::size_t>>& rankings,
                                           const RelevanceJudge& judge,
                                           const std::vector<std::size_t>& n_grid);

}  // namespace spdq::eval
