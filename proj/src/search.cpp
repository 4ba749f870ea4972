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

#include "spdq/search.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "spdq/linalg.hpp"

namespace spdq::search {

using nlohmann::json;

std::vector<double> encode_query(const net::EncoderParams& params, const Matrix& x,
                                 net::Modality modality, const Matrix& c) {
    if (x.cols() != 1) throw InvalidArgument("encode_query: expected a single column");
    const Matrix rep = encode_queries(params, x, modality, c);
    return rep.col(0);
}

Matrix encode_queries(const net::EncoderParams& params, const Matrix& x, net::Modality modality,
                      const Matrix& c) {
    const net::EncoderOutput out = net::forward(params, x, modality);
    if (c.cols() != out.s.rows()) {
        throw DimensionError("encode_query: transform expects dim " + std::to_string(c.cols()) +
                             ", shared head emits " + std::to_string(out.s.rows()));
    }
    return matmul(c, out.s);
}

Matrix build_lut(std::span<const double> query_rep, const Matrix& dict, std::size_t m,
                 std::size_t k_d) {
    if (dict.cols() != m * k_d) throw DimensionError("build_lut: dictionary column count");
    if (dict.rows() != query_rep.size()) {
        throw DimensionError("build_lut: query dim " + std::to_string(query_rep.size()) +
                             " vs dictionary dim " + std::to_string(dict.rows()));
    }
    Matrix lut(m, k_d);
    double* flat = lut.values().data();
    for (std::size_t r = 0; r < dict.rows(); ++r) {
        const double qr = query_rep[r];
        const double* drow = dict.row_ptr(r);
        for (std::size_t c = 0; c < m * k_d; ++c) flat[c] += qr * drow[c];
    }
    return lut;
}

double aqd_score(const Matrix& lut, std::span<const std::uint16_t> code) {
    if (code.size() != lut.rows()) throw DimensionError("aqd_score: code length mismatch");
    double acc = 0.0;
    for (std::size_t slot = 0; slot < code.size(); ++slot) {
        if (code[slot] >= lut.cols()) {
            throw InvalidArgument("aqd_score: code index " + std::to_string(code[slot]) +
                                  " out of range");
        }
        acc += lut(slot, code[slot]);
    }
    return acc;
}

namespace {

template <bool Parallel>
std::vector<RankEntry> rank_impl(std::span<const double> query_rep, const SearchIndex& index,
                                 std::size_t topn, ScanStats* stats) {
    const std::size_t n = index.count();
    if (n == 0) throw InvalidArgument("rank: empty index");
    if (topn > n) throw InvalidArgument("rank: topn exceeds database size");
    if (!index.ids.empty() && index.ids.size() != n) {
        throw InvalidArgument("rank: id list length mismatch");
    }

    const Matrix lut = build_lut(query_rep, index.dict, index.codes.m, index.codes.k_d);
    if (stats != nullptr) stats->table_entries += index.codes.m * index.codes.k_d;

    std::vector<double> scores(n);
    if (stats == nullptr) {
        const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (Parallel)
        for (std::int64_t i = 0; i < count; ++i) {
            const std::size_t item = static_cast<std::size_t>(i);
            const auto code = index.codes.code(item);
            double acc = 0.0;
            for (std::size_t slot = 0; slot < code.size(); ++slot) {
                acc += lut(slot, code[slot]);
            }
            scores[item] = acc;
        }
    } else {
        for (std::size_t item = 0; item < n; ++item) {
            const auto code = index.codes.code(item);
            double acc = 0.0;
            for (std::size_t slot = 0; slot < code.size(); ++slot) {
                acc += lut(slot, code[slot]);
                ++stats->lookups;
            }
            scores[item] = acc;
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto id_of = [&](std::size_t pos) {
        return index.ids.empty() ? static_cast<std::uint64_t>(pos) : index.ids[pos];
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return id_of(a) < id_of(b);
    });

    std::vector<RankEntry> out;
    out.reserve(topn);
    for (std::size_t i = 0; i < topn; ++i) out.push_back({id_of(order[i]), scores[order[i]]});
    return out;
}

}  // namespace

std::vector<RankEntry> rank(std::span<const double> query_rep, const SearchIndex& index,
                            std::size_t topn, ScanStats* stats) {
    return rank_impl<true>(query_rep, index, topn, stats);
}

std::vector<RankEntry> rank_serial(std::span<const double> query_rep, const SearchIndex& index,
                                   std::size_t topn, ScanStats* stats) {
    return rank_impl<false>(query_rep, index, topn, stats);
}

void save_index(const SearchIndex& index, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_binary(index.dict, dir / "d.bin");
    quant::write_codes(index.codes, dir / "codes.bin");
    json manifest;
    manifest["kind"] = "spdq-index";
    manifest["version"] = 1;
    manifest["modality"] = net::modality_name(index.db_modality);
    manifest["n"] = index.count();
    manifest["ids"] = index.ids;
    std::ofstream out(dir / "index.json");
    if (!out) throw IoError("cannot write " + (dir / "index.json").string());
    out << manifest.dump(2) << '\n';
}

SearchIndex load_index(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "index.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw MissingFileError("no such file: " + manifest_path.string());
    }
    std::ifstream in(manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    SearchIndex index;
    try {
        if (manifest.at("kind") != "spdq-index") {
            throw ConfigError(manifest_path.string() + ": not an index manifest");
        }
        index.db_modality = net::modality_from_name(manifest.at("modality").get<std::string>());
        index.ids = manifest.value("ids", std::vector<std::uint64_t>{});
    } catch (const json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    index.dict = read_matrix_binary(dir / "d.bin");
    index.codes = quant::read_codes(dir / "codes.bin");
    if (!index.ids.empty() && index.ids.size() != index.codes.n) {
        throw ConfigError(manifest_path.string() + ": id count disagrees with codes");
    }
    return index;
}

}  // namespace spdq::search
