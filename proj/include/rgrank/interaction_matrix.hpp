/*
 * Copyright 2026 The rgrank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <iterator>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rgrank/errors.hpp"
#include "rgrank/interaction_set.hpp"

namespace rgrank {

// Binary interaction matrix R in compressed sparse row layout, with the
// transposed (per-object) layout kept alongside for object-side sweeps.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;

  Id num_contexts() const { return num_contexts_; }
  Id num_objects() const { return num_objects_; }
  std::size_t num_positives() const { return cols_.size(); }

  // Sorted object ids of context x (I_x).
  std::span<const Id> row(Id x) const {
    return {cols_.data() + row_offsets_[x],
            cols_.data() + row_offsets_[x + 1]};
  }
  // Sorted context ids that interacted with object y.
  std::span<const Id> column(Id y) const {
    return {rows_.data() + col_offsets_[y],
            rows_.data() + col_offsets_[y + 1]};
  }
  std::size_t degree(Id x) const {
    return row_offsets_[x + 1] - row_offsets_[x];
  }
  std::size_t object_degree(Id y) const {
    return col_offsets_[y + 1] - col_offsets_[y];
  }
  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(num_contexts_);
    for (Id x = 0; x < num_contexts_; ++x) d[x] = degree(x);
    return d;
  }
  bool contains(Id x, Id y) const {
    const auto r = row(x);
    return std::binary_search(r.begin(), r.end(), y);
  }

  friend bool operator==(const InteractionMatrix&,
                         const InteractionMatrix&) = default;

  // Builds both layouts from per-context sorted rows.
  static InteractionMatrix from_rows(Id num_contexts, Id num_objects,
                                     const std::vector<std::vector<Id>>& rows) {
    InteractionMatrix m;
    m.num_contexts_ = num_contexts;
    m.num_objects_ = num_objects;
    m.row_offsets_.assign(num_contexts + 1, 0);
    for (Id x = 0; x < num_contexts; ++x) {
      m.row_offsets_[x + 1] = m.row_offsets_[x] + rows[x].size();
      m.cols_.insert(m.cols_.end(), rows[x].begin(), rows[x].end());
    }
    m.col_offsets_.assign(num_objects + 1, 0);
    for (Id y : m.cols_) ++m.col_offsets_[y + 1];
    for (Id y = 0; y < num_objects; ++y) {
      m.col_offsets_[y + 1] += m.col_offsets_[y];
    }
    m.rows_.resize(m.cols_.size());
    std::vector<std::size_t> cursor(m.col_offsets_.begin(),
                                    m.col_offsets_.end() - 1);
    for (Id x = 0; x < num_contexts; ++x) {
      for (Id y : m.row(x)) m.rows_[cursor[y]++] = x;
    }
    return m;
  }

 private:
  Id num_contexts_ = 0;
  Id num_objects_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<Id> cols_;
  std::vector<std::size_t> col_offsets_{0};
  std::vector<Id> rows_;
};

inline InteractionMatrix build_matrix(const InteractionSet& set) {
  std::vector<std::vector<Id>> rows(set.num_contexts());
  // Entries are sorted by (context, object), so rows come out sorted.
  for (const auto& e : set.entries()) rows[e.context].push_back(e.object);
  return InteractionMatrix::from_rows(set.num_contexts(), set.num_objects(),
                                      rows);
}

inline InteractionSet to_set(const InteractionMatrix& matrix) {
  std::vector<Interaction> entries;
  entries.reserve(matrix.num_positives());
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    for (Id y : matrix.row(x)) entries.push_back({x, y});
  }
  return InteractionSet(std::move(entries), matrix.num_contexts(),
                        matrix.num_objects());
}

// ---------------------------------------------------------------------------
// Snapshots. Text: header "M N |D|", then one line per context holding its
// sorted object ids separated by spaces. Binary: magic "RGIM", then
// little-endian u64 M, N, |D|, u64 row offsets[M+1], u32 object ids[|D|].

inline void write_matrix_text(std::ostream& out,
                              const InteractionMatrix& matrix) {
  out << matrix.num_contexts() << ' ' << matrix.num_objects() << ' '
      << matrix.num_positives() << '\n';
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    bool first = true;
    for (Id y : matrix.row(x)) {
      if (!first) out << ' ';
      out << y;
      first = false;
    }
    out << '\n';
  }
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw Error("truncated binary snapshot");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error("truncated binary snapshot");
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace detail

inline void write_matrix_binary(std::ostream& out,
                                const InteractionMatrix& matrix) {
  out.write("RGIM", 4);
  detail::put_u64(out, static_cast<std::uint64_t>(matrix.num_contexts()));
  detail::put_u64(out, static_cast<std::uint64_t>(matrix.num_objects()));
  detail::put_u64(out, matrix.num_positives());
  std::uint64_t offset = 0;
  detail::put_u64(out, 0);
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    offset += matrix.degree(x);
    detail::put_u64(out, offset);
  }
  for (Id x = 0; x < matrix.num_contexts(); ++x) {
    for (Id y : matrix.row(x)) {
      detail::put_u32(out, static_cast<std::uint32_t>(y));
    }
  }
}

namespace detail {

inline InteractionMatrix read_matrix_binary_body(std::istream& in) {
  const auto m = static_cast<Id>(get_u64(in));
  const auto n = static_cast<Id>(get_u64(in));
  const auto d = get_u64(in);
  std::vector<std::uint64_t> offsets(static_cast<std::size_t>(m) + 1);
  for (auto& o : offsets) o = get_u64(in);
  if (offsets.front() != 0 || offsets.back() != d) {
    throw Error("inconsistent offsets in binary snapshot");
  }
  std::vector<std::vector<Id>> rows(m);
  for (Id x = 0; x < m; ++x) {
    if (offsets[x + 1] < offsets[x]) throw Error("decreasing row offsets");
    for (std::uint64_t i = offsets[x]; i < offsets[x + 1]; ++i) {
      const auto y = static_cast<Id>(get_u32(in));
      if (y < 0 || y >= n) throw Error("object id out of range in snapshot");
      rows[x].push_back(y);
    }
    if (!std::is_sorted(rows[x].begin(), rows[x].end()) ||
        std::adjacent_find(rows[x].begin(), rows[x].end()) != rows[x].end()) {
      throw Error("snapshot rows must be sorted and unique");
    }
  }
  return InteractionMatrix::from_rows(m, n, rows);
}

inline InteractionMatrix read_matrix_text_body(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.front() == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(1, "missing snapshot header");
  std::istringstream header(line);
  long long m = -1, n = -1, d = -1;
  if (!(header >> m >> n >> d) || m < 0 || n < 0 || d < 0) {
    throw ParseError(line_no, "snapshot header must be 'M N |D|'");
  }
  std::vector<std::vector<Id>> rows(static_cast<std::size_t>(m));
  long long total = 0;
  for (long long x = 0; x < m; ++x) {
    if (!next_line()) {
      throw ParseError(line_no + 1, "snapshot ended before all rows were read");
    }
    std::istringstream row(line);
    long long y;
    while (row >> y) {
      if (y < 0 || y >= n) throw ParseError(line_no, "object id out of range");
      rows[x].push_back(static_cast<Id>(y));
    }
    if (!row.eof()) throw ParseError(line_no, "malformed snapshot row");
    std::sort(rows[x].begin(), rows[x].end());
    if (std::adjacent_find(rows[x].begin(), rows[x].end()) != rows[x].end()) {
      throw ParseError(line_no, "duplicate object id in row");
    }
    total += static_cast<long long>(rows[x].size());
  }
  if (total != d) {
    throw ParseError(line_no, "row contents disagree with |D| in the header");
  }
  return InteractionMatrix::from_rows(static_cast<Id>(m), static_cast<Id>(n),
                                      rows);
}

}  // namespace detail

// Reads either snapshot flavour, detected by the binary magic.
inline InteractionMatrix read_matrix(std::istream& in) {
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, "RGIM", 4) == 0) {
    return detail::read_matrix_binary_body(in);
  }
  in.clear();
  std::string text(magic, static_cast<std::size_t>(in.gcount()));
  text.append(std::istreambuf_iterator<char>(in),
              std::istreambuf_iterator<char>());
  std::istringstream rest(text);
  return detail::read_matrix_text_body(rest);
}

inline InteractionMatrix read_matrix_file(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_matrix(in);
}

// Interaction sets share the matrix snapshot format.
inline void write_set(std::ostream& out, const InteractionSet& set) {
  write_matrix_text(out, build_matrix(set));
}

inline InteractionSet read_set(std::istream& in) {
  return to_set(read_matrix(in));
}

inline InteractionSet read_set_file(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_set(in);
}

}  // namespace rgrank
