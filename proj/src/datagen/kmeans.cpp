// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <limits>

#include "chronosteer/datagen.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/kernels.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::datagen {
namespace {

struct Nearest {
  std::size_t index;
  double distance;
};

Nearest nearest(const std::vector<double>& centroids, std::size_t k, std::size_t d,
                const double* point) {
  const auto& kt = kernels::active();
  Nearest best{0, kt.squared_distance(point, centroids.data(), d)};
  for (std::size_t c = 1; c < k; ++c) {
    const double dist = kt.squared_distance(point, centroids.data() + c * d, d);
    if (dist < best.distance) best = {c, dist};
  }
  return best;
}

}  // namespace

ClusterModel kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::size_t max_iter, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k == 0) throw UsageError("kmeans: k must be positive");
  if (k > n)
    throw UsageError("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(n) +
                     " points");
  const std::size_t d = points.front().size();
  std::vector<double> flat(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    if (points[i].size() != d) throw DimensionError("kmeans: ragged points");
    std::copy(points[i].begin(), points[i].end(), flat.begin() + i * d);
  }
  const auto& kt = kernels::active();
  const double* p = flat.data();

  ClusterModel m;
  m.k = k;
  m.dim = d;
  m.centroids.resize(k * d);
  Rng rng = substream(seed, 0);

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::copy(p + first * d, p + (first + 1) * d, m.centroids.begin());
  for (std::size_t c = 1; c < k; ++c) {
    const double* prev = m.centroids.data() + (c - 1) * d;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kt.squared_distance(p + i * d, prev, d));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = uniform(rng, 0.0, total);
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point already coincides with a centroid.
      pick = c % n;
    }
    std::copy(p + pick * d, p + (pick + 1) * d, m.centroids.begin() + c * d);
  }

  m.assignment.assign(n, k);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Nearest nb = nearest(m.centroids, k, d, p + i * d);
      changed = changed || nb.index != m.assignment[i];
      m.assignment[i] = nb.index;
      dist[i] = nb.distance;
      inertia += nb.distance;
    }
    m.inertia.push_back(inertia);
    m.iterations = iter + 1;
    if (!changed) break;

    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = m.assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += p[i * d + j];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j)
          m.centroids[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && dist[i] > best) {
          best = dist[i];
          far = i;
        }
      taken[far] = true;
      dist[far] = 0.0;
      std::copy(p + far * d, p + (far + 1) * d, m.centroids.begin() + c * d);
    }
  }
  return m;
}

std::size_t nearest_centroid(const ClusterModel& model, std::span<const double> point) {
  if (point.size() != model.dim) throw DimensionError("nearest_centroid: dimension mismatch");
  return nearest(model.centroids, model.k, model.dim, point.data()).index;
}

std::vector<TaggedSlice> cluster_sample(const std::vector<TaggedSlice>& slices, std::size_t k,
                                        std::uint64_t seed, std::size_t max_iter) {
  if (slices.size() < k)
    throw UsageError("cluster_sample: " + std::to_string(slices.size()) +
                     " slices cannot fill " + std::to_string(k) + " clusters");
  std::vector<std::vector<double>> features;
  features.reserve(slices.size());
  for (const TaggedSlice& ts : slices) {
    const series::Slice s = ts.slice.raw ? series::normalize_slice(ts.slice) : ts.slice;
    std::vector<double> f(s.history);
    f.insert(f.end(), s.future.begin(), s.future.end());
    features.push_back(std::move(f));
  }
  const ClusterModel model = kmeans(features, k, max_iter, seed);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < slices.size(); ++i) members[model.assignment[i]].push_back(i);
  std::vector<TaggedSlice> out;
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c].empty()) continue;
    Rng rng = substream(seed, 1, c);
    const std::size_t pick =
        std::uniform_int_distribution<std::size_t>(0, members[c].size() - 1)(rng);
    out.push_back(slices[members[c][pick]]);
  }
  return out;
}

}  // namespace chronosteer::datagen
