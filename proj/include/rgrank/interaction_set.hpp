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

// Implicit-feedback interaction sets: loading, k-core filtering and per-user
// splitting.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rgrank/errors.hpp"

namespace rgrank {

using Id = std::int32_t;

struct Interaction {
  Id context = 0;
  Id object = 0;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// A deduplicated set of (context, object) positives over dense id ranges
// [0, M) x [0, N). Entries are kept sorted by (context, object). Optional raw
// labels map dense ids back to the identifiers found in the source file.
class InteractionSet {
 public:
  InteractionSet() = default;

  // Sorts and deduplicates `entries`; throws InvalidArgument on ids out of
  // range. Label vectors must be empty or have exactly M (resp. N) entries.
  InteractionSet(std::vector<Interaction> entries, Id num_contexts,
                 Id num_objects, std::vector<std::string> context_labels = {},
                 std::vector<std::string> object_labels = {})
      : entries_(std::move(entries)),
        num_contexts_(num_contexts),
        num_objects_(num_objects),
        context_labels_(std::move(context_labels)),
        object_labels_(std::move(object_labels)) {
    if (num_contexts < 0 || num_objects < 0) {
      throw InvalidArgument("negative dimension");
    }
    if (!context_labels_.empty() &&
        context_labels_.size() != static_cast<std::size_t>(num_contexts)) {
      throw InvalidArgument("context label count does not match M");
    }
    if (!object_labels_.empty() &&
        object_labels_.size() != static_cast<std::size_t>(num_objects)) {
      throw InvalidArgument("object label count does not match N");
    }
    for (const auto& e : entries_) {
      if (e.context < 0 || e.context >= num_contexts || e.object < 0 ||
          e.object >= num_objects) {
        throw InvalidArgument("interaction (" + std::to_string(e.context) +
                              ", " + std::to_string(e.object) +
                              ") outside the id range");
      }
    }
    std::sort(entries_.begin(), entries_.end());
    entries_.erase(std::unique(entries_.begin(), entries_.end()),
                   entries_.end());
  }

  const std::vector<Interaction>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  Id num_contexts() const { return num_contexts_; }
  Id num_objects() const { return num_objects_; }
  const std::vector<std::string>& context_labels() const {
    return context_labels_;
  }
  const std::vector<std::string>& object_labels() const {
    return object_labels_;
  }

  std::string context_label(Id x) const {
    return context_labels_.empty() ? std::to_string(x) : context_labels_[x];
  }
  std::string object_label(Id y) const {
    return object_labels_.empty() ? std::to_string(y) : object_labels_[y];
  }

  bool contains(Id x, Id y) const {
    return std::binary_search(entries_.begin(), entries_.end(),
                              Interaction{x, y});
  }

  std::vector<std::size_t> context_degrees() const {
    std::vector<std::size_t> deg(num_contexts_, 0);
    for (const auto& e : entries_) ++deg[e.context];
    return deg;
  }
  std::vector<std::size_t> object_degrees() const {
    std::vector<std::size_t> deg(num_objects_, 0);
    for (const auto& e : entries_) ++deg[e.object];
    return deg;
  }

  // Same id space (dimensions and labels), different entries.
  InteractionSet with_entries(std::vector<Interaction> entries) const {
    return InteractionSet(std::move(entries), num_contexts_, num_objects_,
                          context_labels_, object_labels_);
  }

  friend bool operator==(const InteractionSet&,
                         const InteractionSet&) = default;

 private:
  std::vector<Interaction> entries_;
  Id num_contexts_ = 0;
  Id num_objects_ = 0;
  std::vector<std::string> context_labels_;
  std::vector<std::string> object_labels_;
};

// ---------------------------------------------------------------------------
// Delimited text ingestion.

struct DelimitedFormat {
  // '\t', ',' or ' '. '\0' splits on any run of tabs, commas and spaces.
  char delimiter = '\0';
  int context_column = 0;
  int object_column = 1;
  int rating_column = -1;     // -1: absent
  int timestamp_column = -1;  // parsed for validation only
  bool header = false;
  std::optional<double> rating_threshold;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line,
                                                  char delimiter) {
  std::vector<std::string_view> fields;
  if (delimiter != '\0') {
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find(delimiter, start);
      if (pos == std::string_view::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    return fields;
  }
  auto is_sep = [](char c) { return c == '\t' || c == ',' || c == ' '; };
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // std::from_chars for double is available in libstdc++ 11.
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() &&
         std::isfinite(out);
}

template <typename Int>
inline bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Assigns dense ids in order of first appearance.
class Indexer {
 public:
  Id operator()(std::string_view raw) {
    auto it = index_.find(std::string(raw));
    if (it != index_.end()) return it->second;
    const Id id = static_cast<Id>(labels_.size());
    labels_.emplace_back(raw);
    index_.emplace(labels_.back(), id);
    return id;
  }
  std::vector<std::string>& labels() { return labels_; }

 private:
  std::unordered_map<std::string, Id> index_;
  std::vector<std::string> labels_;
};

}  // namespace detail

// Parses delimited text. Rows with rating below the threshold are dropped when
// both a threshold and a rating column are configured. Raw ids are re-indexed
// densely (first-appearance order) and kept as labels.
inline InteractionSet load_interactions(std::istream& in,
                                        const DelimitedFormat& format) {
  const int needed = std::max({format.context_column, format.object_column,
                               format.rating_column, format.timestamp_column});
  if (format.context_column < 0 || format.object_column < 0 ||
      format.context_column == format.object_column) {
    throw InvalidArgument("context and object columns must be distinct and "
                          "non-negative");
  }
  detail::Indexer contexts;
  detail::Indexer objects;
  std::vector<Interaction> entries;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = format.header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split_fields(view, format.delimiter);
    if (static_cast<int>(fields.size()) <= needed) {
      throw ParseError(line_no, "expected at least " +
                                    std::to_string(needed + 1) +
                                    " columns, found " +
                                    std::to_string(fields.size()));
    }
    const auto ctx = detail::trim(fields[format.context_column]);
    const auto obj = detail::trim(fields[format.object_column]);
    if (ctx.empty() || obj.empty()) {
      throw ParseError(line_no, "empty identifier");
    }
    if (format.timestamp_column >= 0) {
      double ts = 0;
      if (!detail::parse_double(fields[format.timestamp_column], ts)) {
        throw ParseError(line_no, "malformed timestamp");
      }
    }
    if (format.rating_column >= 0) {
      double rating = 0;
      if (!detail::parse_double(fields[format.rating_column], rating)) {
        throw ParseError(line_no, "malformed rating '" +
                                      std::string(fields[format.rating_column]) +
                                      "'");
      }
      if (format.rating_threshold && rating < *format.rating_threshold) {
        continue;
      }
    }
    entries.push_back({contexts(ctx), objects(obj)});
  }
  if (entries.empty()) {
    throw EmptyDatasetError("no interactions left after loading");
  }
  const Id m = static_cast<Id>(contexts.labels().size());
  const Id n = static_cast<Id>(objects.labels().size());
  return InteractionSet(std::move(entries), m, n,
                        std::move(contexts.labels()),
                        std::move(objects.labels()));
}

// Reads a whole file; gzip-compressed input is decompressed transparently
// (zlib passes plain files through unchanged).
inline std::string read_file(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw Error("cannot open '" + path + "'");
  std::string data;
  std::array<char, 1 << 16> buffer;
  while (true) {
    const int got = gzread(file, buffer.data(),
                           static_cast<unsigned>(buffer.size()));
    if (got < 0) {
      int errnum = 0;
      std::string msg = gzerror(file, &errnum);
      gzclose(file);
      throw Error("read error in '" + path + "': " + msg);
    }
    if (got == 0) break;
    data.append(buffer.data(), static_cast<std::size_t>(got));
  }
  gzclose(file);
  return data;
}

inline InteractionSet load_interactions_file(const std::string& path,
                                             const DelimitedFormat& format) {
  std::istringstream in(read_file(path));
  return load_interactions(in, format);
}

// Writes "context<TAB>object" rows using raw labels.
inline void write_delimited(std::ostream& out, const InteractionSet& set) {
  for (const auto& e : set.entries()) {
    out << set.context_label(e.context) << '\t' << set.object_label(e.object)
        << '\n';
  }
}

// Id-map file: one "context|object <TAB> dense <TAB> raw" line per id.
inline void write_id_map(std::ostream& out, const InteractionSet& set) {
  for (Id x = 0; x < set.num_contexts(); ++x) {
    out << "context\t" << x << '\t' << set.context_label(x) << '\n';
  }
  for (Id y = 0; y < set.num_objects(); ++y) {
    out << "object\t" << y << '\t' << set.object_label(y) << '\n';
  }
}

struct IdMap {
  std::vector<std::string> contexts;
  std::vector<std::string> objects;
};

inline IdMap read_id_map(std::istream& in) {
  IdMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line, '\t');
    Id dense = 0;
    if (fields.size() != 3 || !detail::parse_int(fields[1], dense) ||
        dense < 0) {
      throw ParseError(line_no, "malformed id-map row");
    }
    auto& target = fields[0] == "context"  ? map.contexts
                   : fields[0] == "object" ? map.objects
                                           : throw ParseError(line_no,
                                                              "unknown kind");
    if (static_cast<std::size_t>(dense) != target.size()) {
      throw ParseError(line_no, "id-map ids must be dense and ordered");
    }
    target.emplace_back(fields[2]);
  }
  return map;
}

// ---------------------------------------------------------------------------
// k-core filtering.

// Removes contexts and objects with fewer than `min_degree` interactions,
// repeating until every survivor on both sides meets the threshold. The result
// is the maximal such subset, re-indexed densely with labels carried over.
inline InteractionSet kcore_filter(const InteractionSet& set, int min_degree) {
  if (min_degree < 1) throw InvalidArgument("min_degree must be >= 1");
  const Id m = set.num_contexts();
  const Id n = set.num_objects();
  const auto& entries = set.entries();

  // Adjacency over a bipartite graph with nodes [0, m) for contexts and
  // [m, m + n) for objects; edge index refers to `entries`.
  std::vector<std::vector<std::size_t>> incident(m + n);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    incident[entries[e].context].push_back(e);
    incident[m + entries[e].object].push_back(e);
  }
  std::vector<std::size_t> degree(m + n);
  for (std::size_t v = 0; v < degree.size(); ++v) {
    degree[v] = incident[v].size();
  }
  std::vector<bool> removed(m + n, false);
  std::vector<bool> edge_alive(entries.size(), true);
  std::deque<std::size_t> queue;
  for (std::size_t v = 0; v < degree.size(); ++v) {
    if (degree[v] < static_cast<std::size_t>(min_degree)) {
      removed[v] = true;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t e : incident[v]) {
      if (!edge_alive[e]) continue;
      edge_alive[e] = false;
      const std::size_t x = entries[e].context;
      const std::size_t y = m + entries[e].object;
      const std::size_t other = (v == x) ? y : x;
      --degree[other];
      if (!removed[other] &&
          degree[other] < static_cast<std::size_t>(min_degree)) {
        removed[other] = true;
        queue.push_back(other);
      }
    }
  }

  std::vector<Id> context_map(m, -1);
  std::vector<Id> object_map(n, -1);
  std::vector<std::string> context_labels;
  std::vector<std::string> object_labels;
  Id next = 0;
  for (Id x = 0; x < m; ++x) {
    if (removed[x]) continue;
    context_map[x] = next++;
    context_labels.push_back(set.context_label(x));
  }
  next = 0;
  for (Id y = 0; y < n; ++y) {
    if (removed[m + y]) continue;
    object_map[y] = next++;
    object_labels.push_back(set.object_label(y));
  }
  std::vector<Interaction> kept;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (!edge_alive[e]) continue;
    kept.push_back(
        {context_map[entries[e].context], object_map[entries[e].object]});
  }
  const Id new_m = static_cast<Id>(context_labels.size());
  const Id new_n = static_cast<Id>(object_labels.size());
  return InteractionSet(std::move(kept), new_m, new_n,
                        std::move(context_labels), std::move(object_labels));
}

// ---------------------------------------------------------------------------
// Per-user splitting.

enum class ShortContextPolicy { kTrainOnly, kError };

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitBundle {
  InteractionSet train;
  InteractionSet valid;
  InteractionSet test;
  std::uint64_t seed = 0;
  // Contexts with fewer than 3 interactions, assigned entirely to train.
  std::size_t short_contexts = 0;
};

// Per context: shuffle with a generator seeded once from `seed`; valid and
// test each receive floor(ratio * count) items with a minimum of one when the
// context has at least three; the remainder goes to train.
inline SplitBundle split_per_user(
    const InteractionSet& set, const SplitRatios& ratios, std::uint64_t seed,
    ShortContextPolicy policy = ShortContextPolicy::kTrainOnly) {
  if (!(ratios.train > 0 && ratios.valid > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must be positive and sum to 1");
  }
  std::mt19937_64 rng(seed);
  std::vector<Interaction> train, valid, test;
  std::size_t short_contexts = 0;
  const auto& entries = set.entries();
  std::size_t begin = 0;
  while (begin < entries.size()) {
    std::size_t end = begin;
    while (end < entries.size() &&
           entries[end].context == entries[begin].context) {
      ++end;
    }
    std::vector<Interaction> row(entries.begin() + begin,
                                 entries.begin() + end);
    const std::size_t count = row.size();
    if (count < 3) {
      if (policy == ShortContextPolicy::kError) {
        throw InvalidArgument("context " +
                              set.context_label(entries[begin].context) +
                              " has fewer than 3 interactions");
      }
      ++short_contexts;
      train.insert(train.end(), row.begin(), row.end());
      begin = end;
      continue;
    }
    for (std::size_t i = count - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(row[i], row[pick(rng)]);
    }
    auto share = [count](double ratio) {
      const auto n = static_cast<std::size_t>(
          std::floor(ratio * static_cast<double>(count) + 1e-9));
      return std::max<std::size_t>(n, 1);
    };
    const std::size_t n_valid = share(ratios.valid);
    const std::size_t n_test = share(ratios.test);
    for (std::size_t i = 0; i < count; ++i) {
      if (i < n_valid) {
        valid.push_back(row[i]);
      } else if (i < n_valid + n_test) {
        test.push_back(row[i]);
      } else {
        train.push_back(row[i]);
      }
    }
    begin = end;
  }
  return SplitBundle{set.with_entries(std::move(train)),
                     set.with_entries(std::move(valid)),
                     set.with_entries(std::move(test)), seed, short_contexts};
}

}  // namespace rgrank
