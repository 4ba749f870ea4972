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
#include <filesystem>
#include <span>
#include <vector>

#include "spdq/net.hpp"
#include "spdq/quant.hpp"

namespace spdq::search {

/// Immutable retrieval database: frozen dictionaries plus one code per item.
/// The modality tag records which branch the indexed items belong to.
struct SearchIndex {
    Matrix dict;             // d_z x (m * k_d)
    quant::CodeTable codes;  // one entry per database item
    net::Modality db_modality = net::Modality::text;
    std::vector<std::uint64_t> ids;  // optional; defaults to positions

    std::size_t count() const { return codes.n; }
};

/// Query representation C * s, where s is the shared head output of the
/// query's branch. The private head plays no part at search time.
std::vector<double> encode_query(const net::EncoderParams& params, const Matrix& x,
                                 net::Modality modality, const Matrix& c);

/// Batch form: one column per query.
Matrix encode_queries(const net::EncoderParams& params, const Matrix& x, net::Modality modality,
                      const Matrix& c);

/// lut(slot, k) = <query_rep, codeword(slot, k)>, an m x k_d table.
Matrix build_lut(std::span<const double> query_rep, const Matrix& dict, std::size_t m,
                 std::size_t k_d);

/// Score = sum of m table entries selected by the code; equals the inner
/// product between the query representation and the reconstructed item.
double aqd_score(const Matrix& lut, std::span<const std::uint16_t> code);

struct RankEntry {
    std::uint64_t id = 0;
    double score = 0.0;
};

/// Counters for the complexity contract: scoring n items costs exactly n * m
/// table lookups after one m * k_d table build.
struct ScanStats {
    std::uint64_t lookups = 0;
    std::uint64_t table_entries = 0;
};

/// Scores every database item through the lookup table and returns the top
/// `topn` by descending score, ties broken by ascending id. Item scans are
/// independent and run across threads; pass `stats` to count operations (the
/// counting path is serial).
std::vector<RankEntry> rank(std::span<const double> query_rep, const SearchIndex& index,
                            std::size_t topn, ScanStats* stats = nullptr);
std::vector<RankEntry> rank_serial(std::span<const double> query_rep, const SearchIndex& index,
                                   std::size_t topn, ScanStats* stats = nullptr);

void save_index(const SearchIndex& index, const std::filesystem::path& dir);
SearchIndex load_index(const std::filesystem::path& dir);

}  // namespace spdq::search
