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

#include "spdq/eval.hpp"

#include <algorithm>

namespace spdq::eval {

ApNorm ap_norm_from_name(const std::string& name) {
    if (name == "total") return ApNorm::total_relevant;
    if (name == "min") return ApNorm::min_cap;
    throw InvalidArgument("unknown AP normalization: " + name + " (use total|min)");
}

const char* ap_norm_name(ApNorm norm) {
    return norm == ApNorm::total_relevant ? "total" : "min";
}

double average_precision(const std::vector<bool>& ranked_relevance,
                         std::size_t num_relevant_in_db, std::size_t r, ApNorm norm) {
    if (num_relevant_in_db == 0) {
        throw InvalidArgument("average_precision: query has no relevant items");
    }
    if (r == 0 || r > ranked_relevance.size()) {
        throw InvalidArgument("average_precision: cutoff must be in [1, ranking length]");
    }
    std::size_t hits = 0;
    double acc = 0.0;
    for (std::size_t rank = 1; rank <= r; ++rank) {
        if (ranked_relevance[rank - 1]) {
            ++hits;
            acc += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    const std::size_t denom =
        norm == ApNorm::total_relevant ? num_relevant_in_db : std::min(num_relevant_in_db, r);
    return acc / static_cast<double>(denom);
}

bool RelevanceJudge::relevant(std::size_t query, std::size_t db_item) const {
    for (std::size_t k = 0; k < query_labels->rows(); ++k) {
        if ((*query_labels)(k, query) == 1.0 && (*db_labels)(k, db_item) == 1.0) return true;
    }
    return false;
}

std::size_t RelevanceJudge::relevant_count(std::size_t query) const {
    std::size_t count = 0;
    for (std::size_t j = 0; j < db_labels->cols(); ++j) {
        if (relevant(query, j)) ++count;
    }
    return count;
}

MapResult map_at_r(const std::vector<std::vector<std::size_t>>& rankings,
                   const RelevanceJudge& judge, std::size_t r, ApNorm norm) {
    MapResult out;
    double acc = 0.0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        const std::size_t num_relevant = judge.relevant_count(q);
        if (num_relevant == 0) {
            out.excluded.push_back(q);
            continue;
        }
        const auto& ranking = rankings[q];
        std::vector<bool> rel(std::min(r, ranking.size()));
        for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = judge.relevant(q, ranking[i]);
        const double ap = average_precision(rel, num_relevant, rel.size(), norm);
        out.per_query_ap.push_back(ap);
        out.evaluated.push_back(q);
        acc += ap;
    }
    if (out.evaluated.empty()) {
        throw InvalidArgument("map_at_r: no query has a relevant database item");
    }
    out.map = acc / static_cast<double>(out.evaluated.size());
    return out;
}

std::vector<PrecisionPoint> topn_precision(const std::vector<std::vector<std::size_t>>& rankings,
                                           const RelevanceJudge& judge,
                                           const std::vector<std::size_t>& n_grid) {
    if (rankings.empty()) throw InvalidArgument("topn_precision: no rankings");
    for (std::size_t n : n_grid) {
        if (n == 0 || n > judge.db_size()) {
            throw InvalidArgument("topn_precision: grid point " + std::to_string(n) +
                                  " outside [1, database size]");
        }
    }
    std::vector<PrecisionPoint> curve;
    curve.reserve(n_grid.size());
    for (std::size_t n : n_grid) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rankings.size(); ++q) {
            if (rankings[q].size() < n) {
                throw InvalidArgument("topn_precision: ranking shorter than grid point");
            }
            std::size_t hits = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (judge.relevant(q, rankings[q][i])) ++hits;
            }
            acc += static_cast<double>(hits) / static_cast<double>(n);
        }
        curve.push_back({n, acc / static_cast<double>(rankings.size())});
    }
    return curve;
}

}  // namespace spdq::eval
