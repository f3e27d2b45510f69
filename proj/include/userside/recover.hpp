// Copyright 2026 The userside authors
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

#ifndef USERSIDE_RECOVER_HPP
#define USERSIDE_RECOVER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "userside/core.hpp"
#include "userside/ingest.hpp"
#include "userside/network.hpp"

/**
 * @file recover.hpp
 * @brief Embedding recovery from the recommendation network alone.
 *
 * A k-NN-style provider's pages reveal which items are close in its latent
 * space. Treating the symmetrized unweighted recommendation graph as a
 * proxy metric, shortest-path distances approximate latent distances up to
 * scale, and classical multidimensional scaling turns them into
 * coordinates. The result is meaningful up to a similarity transform, which
 * Procrustes alignment factors out when ground truth is available.
 */

namespace userside {

/** All-pairs graph distances; `disconnected` marks capped entries. */
struct DistanceMatrix {
  Eigen::MatrixXd d;
  bool disconnected = false;
};

/** Coordinates recovered by MDS; `deficient` marks zero-padded columns. */
struct RecoveredEmbedding {
  Eigen::MatrixXd coords;
  bool deficient = false;
};

/** Procrustes alignment output. */
struct ProcrustesResult {
  Eigen::MatrixXd aligned;  ///< s * X * R + 1 t^T, best fit to Y
  double rmse = 0.0;        ///< root mean squared point-wise distance to Y
  bool degenerate = false;  ///< X had zero variance; scale was clamped
};

/**
 * Unweighted all-pairs shortest paths by BFS per source.
 *
 * With `symmetrize` (the default) an undirected edge {i, j} exists when the
 * network has i->j or j->i. Unreachable pairs get the cap value `n` and
 * raise the `disconnected` flag.
 */
inline DistanceMatrix shortest_paths(const RecNetwork& net, bool symmetrize = true) {
  const ItemId n = net.n;
  std::vector<std::vector<ItemId>> adj(static_cast<std::size_t>(n));
  for (ItemId i = 0; i < n; ++i) {
    for (std::size_t e = net.offset[static_cast<std::size_t>(i)];
         e < net.offset[static_cast<std::size_t>(i) + 1]; ++e) {
      adj[static_cast<std::size_t>(i)].push_back(net.dst[e]);
      if (symmetrize) adj[static_cast<std::size_t>(net.dst[e])].push_back(i);
    }
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }

  DistanceMatrix out;
  out.d = Eigen::MatrixXd::Zero(n, n);
  const double cap = static_cast<double>(n);
  std::vector<int> dist(static_cast<std::size_t>(n));
  for (ItemId s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    std::deque<ItemId> queue{s};
    while (!queue.empty()) {
      const ItemId u = queue.front();
      queue.pop_front();
      for (ItemId v : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
    for (ItemId t = 0; t < n; ++t) {
      if (dist[static_cast<std::size_t>(t)] < 0) {
        out.d(s, t) = cap;
        out.disconnected = true;
      } else {
        out.d(s, t) = static_cast<double>(dist[static_cast<std::size_t>(t)]);
      }
    }
  }
  return out;
}

/**
 * Classical (Torgerson) multidimensional scaling.
 *
 * Double-centers the squared distances, B = -1/2 J (D o D) J, and builds
 * coordinates from the top `d` eigenpairs as eigenvector * sqrt(eigenvalue).
 * Eigenvalues that are not positive cannot carry a coordinate; their
 * columns are zero and the `deficient` flag is raised. Column signs follow
 * a fixed convention (largest-magnitude entry positive) and columns are
 * re-centered, so results are exactly reproducible.
 */
inline RecoveredEmbedding classical_mds(const DistanceMatrix& dist, int d) {
  const Eigen::Index n = dist.d.rows();
  if (d < 1 || d > n - 1) throw ConstraintError("mds target dimension must lie in [1, n-1]");

  const Eigen::MatrixXd d2 = dist.d.array().square();
  const Eigen::MatrixXd j =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd b = -0.5 * j * d2 * j;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success) throw std::runtime_error("mds eigendecomposition failed");

  RecoveredEmbedding out;
  out.coords = Eigen::MatrixXd::Zero(n, d);
  // Eigen orders eigenvalues ascending; walk them from the top.
  for (int c = 0; c < d; ++c) {
    const Eigen::Index idx = n - 1 - c;
    const double lambda = eig.eigenvalues()(idx);
    if (lambda <= 0.0) {
      out.deficient = true;
      continue;
    }
    out.coords.col(c) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
  }

  for (int c = 0; c < d; ++c) {
    Eigen::Index peak = 0;
    out.coords.col(c).cwiseAbs().maxCoeff(&peak);
    if (out.coords(peak, c) < 0.0) out.coords.col(c) = -out.coords.col(c);
  }
  out.coords.rowwise() -= out.coords.colwise().mean();
  return out;
}

/**
 * Optimal similarity transform (rotation, reflection, isotropic scale,
 * translation) aligning X onto Y in the least-squares sense.
 *
 * If X has zero variance no scale is identifiable; it is clamped to 0,
 * collapsing the alignment onto Y's centroid, and flagged.
 */
inline ProcrustesResult procrustes_similarity(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw std::invalid_argument("procrustes needs matching shapes");
  }
  const Eigen::Index n = x.rows();
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const Eigen::RowVectorXd my = y.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - mx;
  const Eigen::MatrixXd yc = y.rowwise() - my;

  ProcrustesResult out;
  const double x_norm2 = xc.squaredNorm();
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(x.cols(), x.cols());
  double scale = 0.0;
  if (x_norm2 > 0.0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xc.transpose() * yc,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    rot = svd.matrixU() * svd.matrixV().transpose();
    scale = svd.singularValues().sum() / x_norm2;
  } else {
    out.degenerate = true;
  }
  const Eigen::RowVectorXd t = my - scale * (mx * rot);
  out.aligned = (scale * (x * rot)).rowwise() + t;
  out.rmse = std::sqrt((out.aligned - y).squaredNorm() / static_cast<double>(n));
  return out;
}

/** Euclidean distance matrix of row-point coordinates. */
inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& coords) {
  const Eigen::Index n = coords.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = (coords.row(i) - coords.row(j)).norm();
      out(i, j) = dij;
      out(j, i) = dij;
    }
  }
  return out;
}

namespace detail {

/** Ranks with ties averaged, the convention Spearman correlation expects. */
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/** Spearman rank correlation with average ranks on ties. */
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("spearman needs two equal-length samples of size >= 2");
  }
  const std::vector<double> ra = detail::average_ranks(a);
  const std::vector<double> rb = detail::average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

/** Upper-triangle entries (i < j) flattened row-major. */
inline std::vector<double> upper_triangle(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.rows() * (m.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

/** End-to-end recovery artifacts plus alignment diagnostics. */
struct EtpResult {
  RecNetwork net;
  DistanceMatrix dist;
  RecoveredEmbedding embedding;
  // Filled only when ground truth was supplied.
  double spearman_to_truth = std::numeric_limits<double>::quiet_NaN();
  double procrustes_rmse = std::numeric_limits<double>::quiet_NaN();
};

/**
 * Full pipeline: crawl the oracle, symmetrize, run BFS shortest paths, and
 * recover `d`-dimensional coordinates by classical MDS. When `truth` is
 * given (one row per item), the result carries the Spearman correlation
 * between recovered and true pairwise distances and the Procrustes RMSE.
 */
inline EtpResult etp_pipeline(const ProviderOracle& oracle, int d,
                              const Eigen::MatrixXd* truth = nullptr) {
  EtpResult out;
  out.net = crawl(oracle);
  out.dist = shortest_paths(out.net);
  out.embedding = classical_mds(out.dist, d);
  if (truth != nullptr) {
    if (truth->rows() != out.embedding.coords.rows()) {
      throw std::invalid_argument("ground truth row count does not match the universe");
    }
    out.spearman_to_truth = spearman(upper_triangle(pairwise_distances(out.embedding.coords)),
                                     upper_triangle(pairwise_distances(*truth)));
    out.procrustes_rmse = procrustes_similarity(out.embedding.coords, *truth).rmse;
  }
  return out;
}

/** VectorTable rows as an Eigen matrix (one row per item). */
inline Eigen::MatrixXd to_matrix(const VectorTable& table) {
  Eigen::MatrixXd m(table.num_items(), static_cast<Eigen::Index>(table.dim));
  for (ItemId i = 0; i < table.num_items(); ++i) {
    for (std::size_t j = 0; j < table.dim; ++j) {
      m(i, static_cast<Eigen::Index>(j)) = table.rows[static_cast<std::size_t>(i)][j];
    }
  }
  return m;
}

/** Eigen matrix rows as a VectorTable. */
inline VectorTable to_table(const Eigen::MatrixXd& m) {
  VectorTable table;
  table.dim = static_cast<std::size_t>(m.cols());
  table.rows.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    table.rows[static_cast<std::size_t>(i)].resize(table.dim);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
  }
  return table;
}

}  // namespace userside

#endif  // USERSIDE_RECOVER_HPP
