/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "goldfish/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "goldfish/error.h"

namespace goldfish::data {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<std::size_t> iota_positions(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::size_t> shuffled_positions(std::size_t n, std::uint64_t seed) {
  auto v = iota_positions(n);
  std::mt19937_64 rng(seed);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

// Splits `order` into `parts` contiguous runs whose sizes differ by <= 1.
std::vector<std::vector<std::size_t>> split_even(const std::vector<std::size_t>& order,
                                                 std::size_t parts) {
  std::vector<std::vector<std::size_t>> out(parts);
  const std::size_t base = order.size() / parts;
  const std::size_t extra = order.size() % parts;
  std::size_t at = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out[p].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                  order.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += len;
  }
  return out;
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("truncated IDX header in " + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::size_t square_side(std::size_t dims) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dims))));
  if (side * side != dims) {
    throw PreconditionError("feature count " + std::to_string(dims) +
                            " is not a square image; cannot place a trigger");
  }
  return side;
}

void stamp(std::span<double> row, std::size_t side, const BackdoorSpec& spec) {
  for (std::size_t r = side - spec.trigger_size; r < side; ++r) {
    for (std::size_t c = side - spec.trigger_size; c < side; ++c) {
      row[r * side + c] = spec.trigger_value;
    }
  }
}

double point_segment_distance(double px, double py, double ax, double ay, double bx,
                              double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

// ---------------------------------------------------------------------------
// LabeledDataset

LabeledDataset LabeledDataset::from_columns(std::size_t dims, std::size_t num_classes,
                                            std::vector<double> features,
                                            std::vector<int> labels,
                                            std::vector<std::uint64_t> ids) {
  const std::size_t n = labels.size();
  if (ids.size() != n || features.size() != n * dims) {
    throw PreconditionError("dataset columns have inconsistent row counts");
  }
  if (num_classes < 1) throw PreconditionError("dataset needs at least one class");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw PreconditionError("label " + std::to_string(y) + " outside [0, " +
                              std::to_string(num_classes) + ")");
    }
  }
  for (double f : features) {
    if (!(f >= 0.0 && f <= 1.0)) throw PreconditionError("feature outside [0, 1]");
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(n);
  for (auto id : ids) {
    if (!seen.insert(id).second) {
      throw PreconditionError("duplicate example id " + std::to_string(id));
    }
  }
  auto storage = std::make_shared<DatasetStorage>();
  storage->dims = dims;
  storage->num_classes = num_classes;
  storage->features = std::move(features);
  storage->labels = std::move(labels);
  storage->ids = std::move(ids);

  LabeledDataset ds;
  ds.storage_ = std::move(storage);
  ds.rows_ = iota_positions(n);
  return ds;
}

std::vector<std::uint64_t> LabeledDataset::ids() const {
  std::vector<std::uint64_t> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = id(i);
  return out;
}

std::vector<int> LabeledDataset::labels() const {
  std::vector<int> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = label(i);
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> positions) const {
  LabeledDataset out;
  out.storage_ = storage_;
  out.rows_.reserve(positions.size());
  for (std::size_t p : positions) {
    if (p >= rows_.size()) throw PreconditionError("subset position out of range");
    out.rows_.push_back(rows_[p]);
  }
  return out;
}

nn::Matrix LabeledDataset::gather(std::span<const std::size_t> positions) const {
  nn::Matrix m(positions.size(), dims());
  for (std::size_t r = 0; r < positions.size(); ++r) {
    auto src = features(positions[r]);
    std::copy(src.begin(), src.end(), m.row(r).begin());
  }
  return m;
}

nn::Matrix LabeledDataset::all_features() const {
  return gather(iota_positions(size()));
}

LabeledDataset LabeledDataset::materialize() const {
  std::vector<double> feats;
  feats.reserve(size() * dims());
  for (std::size_t i = 0; i < size(); ++i) {
    auto f = features(i);
    feats.insert(feats.end(), f.begin(), f.end());
  }
  return from_columns(dims(), num_classes(), std::move(feats), labels(), ids());
}

LabeledDataset merge(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.empty()) return b.materialize();
  if (b.empty()) return a.materialize();
  if (a.dims() != b.dims() || a.num_classes() != b.num_classes()) {
    throw ShapeError("cannot merge datasets of different shape");
  }
  std::vector<double> feats;
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;
  for (const auto* d : {&a, &b}) {
    for (std::size_t i = 0; i < d->size(); ++i) {
      auto f = d->features(i);
      feats.insert(feats.end(), f.begin(), f.end());
      labels.push_back(d->label(i));
      ids.push_back(d->id(i));
    }
  }
  return LabeledDataset::from_columns(a.dims(), a.num_classes(), std::move(feats),
                                      std::move(labels), std::move(ids));
}

bool same_examples(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() != b.size() || a.dims() != b.dims()) return false;
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < b.size(); ++i) index.emplace(b.id(i), i);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto it = index.find(a.id(i));
    if (it == index.end()) return false;
    if (a.label(i) != b.label(it->second)) return false;
    auto fa = a.features(i);
    auto fb = b.features(it->second);
    if (!std::equal(fa.begin(), fa.end(), fb.begin())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sources

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path,
                        std::size_t num_classes) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open " + images_path.string());
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open " + labels_path.string());

  if (read_be32(img, images_path.string()) != kIdxImagesMagic) {
    throw FormatError("bad IDX image magic in " + images_path.string());
  }
  const std::uint32_t n_images = read_be32(img, images_path.string());
  const std::uint32_t rows = read_be32(img, images_path.string());
  const std::uint32_t cols = read_be32(img, images_path.string());

  if (read_be32(lab, labels_path.string()) != kIdxLabelsMagic) {
    throw FormatError("bad IDX label magic in " + labels_path.string());
  }
  const std::uint32_t n_labels = read_be32(lab, labels_path.string());
  if (n_images != n_labels) {
    throw FormatError("IDX image count " + std::to_string(n_images) +
                      " does not match label count " + std::to_string(n_labels));
  }

  const std::size_t n = n_images;
  const std::size_t dims = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(n * dims);
  if (!img.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixels.size()))) {
    throw FormatError("truncated IDX image payload in " + images_path.string());
  }
  std::vector<unsigned char> raw_labels(n);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(raw_labels.size()))) {
    throw FormatError("truncated IDX label payload in " + labels_path.string());
  }

  std::vector<double> feats(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) feats[i] = pixels[i] / 255.0;
  std::vector<int> labels(raw_labels.begin(), raw_labels.end());
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  return LabeledDataset::from_columns(dims, num_classes, std::move(feats),
                                      std::move(labels), std::move(ids));
}

void write_idx(const LabeledDataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  const std::size_t side = square_side(data.dims());
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw IoError("cannot write IDX pair");
  write_be32(img, kIdxImagesMagic);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(side));
  write_be32(img, static_cast<std::uint32_t>(side));
  write_be32(lab, kIdxLabelsMagic);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double f : data.features(i)) {
      img.put(static_cast<char>(static_cast<unsigned char>(std::lround(f * 255.0))));
    }
    lab.put(static_cast<char>(data.label(i)));
  }
}

LabeledDataset gen_synthetic(std::size_t n, std::size_t dims, std::size_t num_classes,
                             std::uint64_t seed, double separation) {
  if (num_classes < 2) throw PreconditionError("need at least two classes");
  if (n < num_classes) {
    throw PreconditionError("need at least one example per class (n >= classes)");
  }
  if (dims < num_classes) {
    throw PreconditionError("simplex means need dims >= classes");
  }
  // Means are scaled standard-basis vectors: pairwise distance = separation.
  const double offset = separation / std::sqrt(2.0);
  // Affine map z -> (z + 4) / (offset + 8) keeps +-4 sigma inside [0, 1].
  const double lo = -4.0, span = offset + 8.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> feats(n * dims);
  std::vector<int> labels(n);
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<int>(i % num_classes);  // every class covered
    labels[i] = y;
    ids[i] = i;
    for (std::size_t d = 0; d < dims; ++d) {
      const double z = noise(rng) + (d == static_cast<std::size_t>(y) ? offset : 0.0);
      feats[i * dims + d] = std::clamp((z - lo) / span, 0.0, 1.0);
    }
  }
  // Shuffle row order so class labels are not periodic.
  auto order = shuffled_positions(n, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> f2(n * dims);
  std::vector<int> l2(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(feats.begin() + static_cast<std::ptrdiff_t>(order[i] * dims), dims,
                f2.begin() + static_cast<std::ptrdiff_t>(i * dims));
    l2[i] = labels[order[i]];
  }
  return LabeledDataset::from_columns(dims, num_classes, std::move(f2), std::move(l2),
                                      std::move(ids));
}

LabeledDataset gen_synthetic_images(std::size_t n, std::size_t num_classes,
                                    std::uint64_t seed, std::size_t side,
                                    std::uint64_t template_seed) {
  if (num_classes < 2) throw PreconditionError("need at least two classes");
  if (n < num_classes) throw PreconditionError("need n >= classes");
  if (side < 12) throw PreconditionError("image side must be at least 12");

  constexpr int kStrokes = 4;
  struct Segment {
    double ax, ay, bx, by;
  };
  // Stroke endpoints stay inside the central box, away from the border.
  const double box_lo = 0.18 * static_cast<double>(side);
  const double box_hi = 0.65 * static_cast<double>(side);
  std::mt19937_64 trng(template_seed);
  std::uniform_real_distribution<double> place(box_lo, box_hi);
  std::vector<std::vector<Segment>> templates(num_classes);
  for (auto& t : templates) {
    for (int s = 0; s < kStrokes; ++s) {
      t.push_back({place(trng), place(trng), place(trng), place(trng)});
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.8);
  std::normal_distribution<double> pixel_noise(0.0, 0.08);
  std::uniform_int_distribution<int> shift(-1, 1);
  std::uniform_real_distribution<double> thickness(0.9, 1.6);
  std::uniform_real_distribution<double> intensity(0.65, 1.0);

  const std::size_t dims = side * side;
  std::vector<double> feats(n * dims, 0.0);
  std::vector<int> labels(n);
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<int>(i % num_classes);
    labels[i] = y;
    ids[i] = i;
    const double dx = shift(rng), dy = shift(rng);
    const double th = thickness(rng);
    const double ink = intensity(rng);
    std::vector<Segment> segs = templates[static_cast<std::size_t>(y)];
    for (auto& s : segs) {
      s.ax += dx + jitter(rng);
      s.ay += dy + jitter(rng);
      s.bx += dx + jitter(rng);
      s.by += dy + jitter(rng);
    }
    double* img = feats.data() + i * dims;
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const double px = static_cast<double>(c) + 0.5, py = static_cast<double>(r) + 0.5;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : segs) {
          best = std::min(best, point_segment_distance(px, py, s.ax, s.ay, s.bx, s.by));
        }
        // Solid core of width th, one-pixel antialiased falloff.
        const double v = std::clamp(1.0 - std::max(0.0, best - 0.5 * th), 0.0, 1.0);
        if (v > 0.0) {
          img[r * side + c] = std::clamp(ink * v + pixel_noise(rng), 0.0, 1.0);
        }
      }
    }
  }
  return LabeledDataset::from_columns(dims, num_classes, std::move(feats),
                                      std::move(labels), std::move(ids));
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,label";
  for (std::size_t d = 0; d < data.dims(); ++d) out << ",f" << d;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.id(i) << ',' << data.label(i);
    for (double f : data.features(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", f);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

LabeledDataset load_csv(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV " + path.string());

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    throw FormatError("CSV header must start with id,label,f0");
  }
  const std::size_t dims = header.size() - 2;
  for (std::size_t d = 0; d < dims; ++d) {
    if (header[d + 2] != "f" + std::to_string(d)) {
      throw FormatError("unexpected CSV column '" + header[d + 2] + "'");
    }
  }

  std::vector<double> feats;
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    try {
      while (std::getline(ss, cell, ',')) {
        if (col == 0) {
          ids.push_back(std::stoull(cell));
        } else if (col == 1) {
          labels.push_back(std::stoi(cell));
        } else {
          feats.push_back(std::stod(cell));
        }
        ++col;
      }
    } catch (const std::exception&) {
      throw FormatError("unparsable CSV cell on line " + std::to_string(lineno));
    }
    if (col != dims + 2) {
      throw FormatError("CSV line " + std::to_string(lineno) + " has " +
                        std::to_string(col) + " cells");
    }
  }
  return LabeledDataset::from_columns(dims, num_classes, std::move(feats),
                                      std::move(labels), std::move(ids));
}

HoldoutSplit split_holdout(const LabeledDataset& data, std::size_t test_size,
                           std::uint64_t seed) {
  if (test_size >= data.size()) {
    throw PreconditionError("holdout larger than dataset");
  }
  auto order = shuffled_positions(data.size(), seed);
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.subset(train), data.subset(test)};
}

// ---------------------------------------------------------------------------
// Partitioning

namespace {

double population_variance(const std::vector<LabeledDataset>& parts) {
  if (parts.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& p : parts) mean += static_cast<double>(p.size());
  mean /= static_cast<double>(parts.size());
  double var = 0.0;
  for (const auto& p : parts) {
    const double d = static_cast<double>(p.size()) - mean;
    var += d * d;
  }
  return var / static_cast<double>(parts.size());
}

}  // namespace

ClientPartition partition_iid(const LabeledDataset& data, std::size_t num_clients,
                              std::uint64_t seed) {
  if (num_clients < 1) throw PreconditionError("need at least one client");
  if (num_clients > data.size()) {
    throw PreconditionError("more clients than examples");
  }
  ClientPartition part;
  for (const auto& pos : split_even(shuffled_positions(data.size(), seed), num_clients)) {
    part.clients.push_back(data.subset(pos));
  }
  part.size_variance = population_variance(part.clients);
  return part;
}

ClientPartition partition_heterogeneous(const LabeledDataset& data,
                                        std::size_t num_clients, std::uint64_t seed,
                                        const HeterogeneityOptions& options) {
  if (num_clients < 2) throw PreconditionError("heterogeneous split needs >= 2 clients");
  const std::size_t classes = data.num_classes();
  if (data.size() < num_clients * classes) {
    throw PreconditionError("cannot give every client at least one example per class count");
  }
  if (!(options.size_exponent > 0.0) || !(options.label_concentration > 0.0)) {
    throw ConfigError("heterogeneity parameters must be positive");
  }
  std::mt19937_64 rng(seed);

  // Client sizes: Pareto draws normalized so that sizes sum to |data| with a
  // floor of `classes` examples each. Remainder goes to the largest
  // fractional parts (ties broken by client index).
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> raw(num_clients);
  for (auto& r : raw) r = std::pow(1.0 - unit(rng), -1.0 / options.size_exponent);
  const double raw_sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  const std::size_t spare = data.size() - num_clients * classes;
  std::vector<std::size_t> sizes(num_clients);
  std::vector<std::pair<double, std::size_t>> frac(num_clients);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < num_clients; ++c) {
    const double share = static_cast<double>(spare) * raw[c] / raw_sum;
    const auto whole = static_cast<std::size_t>(std::floor(share));
    sizes[c] = classes + whole;
    assigned += whole;
    frac[c] = {share - static_cast<double>(whole), c};
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t k = 0; assigned < spare; ++k, ++assigned) {
    ++sizes[frac[k % num_clients].second];
  }

  // Per-class pools in shuffled order.
  std::vector<std::vector<std::size_t>> pools(classes);
  for (std::size_t p : shuffled_positions(data.size(), rng())) {
    pools[static_cast<std::size_t>(data.label(p))].push_back(p);
  }

  std::vector<double> pooled(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    pooled[k] = static_cast<double>(pools[k].size()) / static_cast<double>(data.size());
  }

  ClientPartition part;
  std::gamma_distribution<double> gamma(
      std::isinf(options.label_concentration) ? 1.0 : options.label_concentration, 1.0);
  for (std::size_t c = 0; c < num_clients; ++c) {
    std::vector<double> mix(classes);
    if (std::isinf(options.label_concentration)) {
      mix = pooled;
    } else {
      for (auto& m : mix) m = gamma(rng);
      const double s = std::accumulate(mix.begin(), mix.end(), 0.0);
      for (auto& m : mix) m = s > 0.0 ? m / s : 1.0 / static_cast<double>(classes);
    }
    std::vector<std::size_t> mine;
    mine.reserve(sizes[c]);
    for (std::size_t slot = 0; slot < sizes[c]; ++slot) {
      double mass = 0.0;
      for (std::size_t k = 0; k < classes; ++k) {
        if (!pools[k].empty()) mass += mix[k];
      }
      std::size_t pick = classes;
      if (mass > 0.0) {
        double u = unit(rng) * mass;
        for (std::size_t k = 0; k < classes; ++k) {
          if (pools[k].empty()) continue;
          pick = k;
          if (u < mix[k]) break;
          u -= mix[k];
        }
      } else {
        // The client's preferred classes are exhausted; take any remaining.
        for (std::size_t k = 0; k < classes; ++k) {
          if (!pools[k].empty()) {
            pick = k;
            break;
          }
        }
      }
      if (pick == classes) break;
      mine.push_back(pools[pick].back());
      pools[pick].pop_back();
    }
    std::sort(mine.begin(), mine.end());
    part.clients.push_back(data.subset(mine));
  }
  part.size_variance = population_variance(part.clients);
  return part;
}

std::size_t ShardSet::total_size() const {
  std::size_t n = 0;
  for (const auto& s : shards) n += s.size();
  return n;
}

ShardSet shard_split(const LabeledDataset& client_data, std::size_t num_shards,
                     std::uint64_t seed) {
  if (num_shards < 1) throw PreconditionError("need at least one shard");
  if (num_shards > client_data.size()) {
    throw PreconditionError("more shards than examples");
  }
  ShardSet set;
  for (const auto& pos :
       split_even(shuffled_positions(client_data.size(), seed), num_shards)) {
    set.shards.push_back(client_data.subset(pos));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Backdoor

void BackdoorSpec::validate(std::size_t num_classes) const {
  if (!(poison_rate > 0.0 && poison_rate <= 1.0)) {
    throw ConfigError("poison rate must lie in (0, 1]");
  }
  if (target_label < 0 || static_cast<std::size_t>(target_label) >= num_classes) {
    throw ConfigError("backdoor target label outside the class range");
  }
  if (trigger_size == 0) throw ConfigError("trigger size must be positive");
}

LabeledDataset poison_ids(const LabeledDataset& data,
                          std::span<const std::uint64_t> ids,
                          const BackdoorSpec& spec) {
  spec.validate(data.num_classes());
  const std::size_t side = square_side(data.dims());
  if (spec.trigger_size > side) throw PreconditionError("trigger larger than image");
  std::unordered_set<std::uint64_t> targets(ids.begin(), ids.end());

  std::vector<double> feats;
  feats.reserve(data.size() * data.dims());
  std::vector<int> labels = data.labels();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto f = data.features(i);
    const std::size_t at = feats.size();
    feats.insert(feats.end(), f.begin(), f.end());
    if (targets.count(data.id(i))) {
      stamp(std::span<double>(feats.data() + at, data.dims()), side, spec);
      labels[i] = spec.target_label;
      ++hit;
    }
  }
  if (hit != targets.size()) throw PreconditionError("poison id not in dataset");
  return LabeledDataset::from_columns(data.dims(), data.num_classes(), std::move(feats),
                                      std::move(labels), data.ids());
}

PoisonResult inject_backdoor(const LabeledDataset& data, const BackdoorSpec& spec,
                             std::uint64_t seed) {
  spec.validate(data.num_classes());
  square_side(data.dims());
  const auto count = static_cast<std::size_t>(
      std::floor(spec.poison_rate * static_cast<double>(data.size())));
  if (count < 1) throw PreconditionError("poison rate selects no examples");

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) != spec.target_label) eligible.push_back(i);
  }
  if (eligible.size() < count) {
    throw PreconditionError("not enough non-target examples to poison");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);

  PoisonResult res;
  for (std::size_t k = 0; k < count; ++k) res.poisoned_ids.push_back(data.id(eligible[k]));
  std::sort(res.poisoned_ids.begin(), res.poisoned_ids.end());
  res.data = poison_ids(data, res.poisoned_ids, spec);
  return res;
}

LabeledDataset apply_trigger(const LabeledDataset& data, const BackdoorSpec& spec) {
  const std::size_t side = square_side(data.dims());
  if (spec.trigger_size > side) throw PreconditionError("trigger larger than image");
  std::vector<double> feats;
  feats.reserve(data.size() * data.dims());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto f = data.features(i);
    const std::size_t at = feats.size();
    feats.insert(feats.end(), f.begin(), f.end());
    stamp(std::span<double>(feats.data() + at, data.dims()), side, spec);
  }
  return LabeledDataset::from_columns(data.dims(), data.num_classes(), std::move(feats),
                                      data.labels(), data.ids());
}

// ---------------------------------------------------------------------------
// Deletion

DeletionSplit apply_deletion(const LabeledDataset& client_data,
                             const DeletionRequest& request) {
  if (request.deleted_ids.empty()) {
    throw PreconditionError("deletion request must name at least one example");
  }
  std::unordered_set<std::uint64_t> doomed(request.deleted_ids.begin(),
                                           request.deleted_ids.end());
  std::vector<std::size_t> forget, remain;
  for (std::size_t i = 0; i < client_data.size(); ++i) {
    (doomed.count(client_data.id(i)) ? forget : remain).push_back(i);
  }
  if (forget.size() != doomed.size()) {
    throw PreconditionError("deletion request names an id the client does not hold");
  }
  return {client_data.subset(forget), client_data.subset(remain)};
}

}  // namespace goldfish::data
