#include "mslc/entropy/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "mslc/binio.hpp"

namespace mslc {

std::string to_string(OccVariant v) {
  switch (v) {
    case OccVariant::O: return "O";
    case OccVariant::OT: return "OT";
    case OccVariant::OTB: return "OTB";
    case OccVariant::OTBCC: return "OTBCC";
  }
  return "?";
}

OccVariant occ_variant_from_string(const std::string& s) {
  if (s == "O") return OccVariant::O;
  if (s == "OT") return OccVariant::OT;
  if (s == "OTB") return OccVariant::OTB;
  if (s == "OTBCC") return OccVariant::OTBCC;
  throw std::invalid_argument("unknown occupancy variant: " + s);
}

std::string to_string(IntVariant v) {
  switch (v) {
    case IntVariant::Passthrough: return "Passthrough";
    case IntVariant::Mlp1: return "MLP1";
    case IntVariant::Cc: return "CC";
  }
  return "?";
}

IntVariant int_variant_from_string(const std::string& s) {
  if (s == "Passthrough") return IntVariant::Passthrough;
  if (s == "MLP1") return IntVariant::Mlp1;
  if (s == "CC") return IntVariant::Cc;
  throw std::invalid_argument("unknown intensity variant: " + s);
}

// ---------------------------------------------------------------- histogram

HistogramModel::HistogramModel(int depth) : depth_(depth) {
  counts_.assign(static_cast<size_t>(depth), {});
}

void HistogramModel::add(const ParsedOctree& tree) {
  if (tree.depth != depth_) throw std::invalid_argument("histogram: depth mismatch");
  for (const OctreeNode& n : tree.nodes) counts_[static_cast<size_t>(n.level)][n.byte] += 1;
}

Eigen::RowVectorXd HistogramModel::probs(int level) const {
  const auto& c = counts_.at(static_cast<size_t>(level));
  int64_t total = 0;
  for (int64_t v : c) total += v;
  Eigen::RowVectorXd p(256);
  double denom = static_cast<double>(total) + 256.0;
  for (int s = 0; s < 256; ++s) p[s] = (static_cast<double>(c[s]) + 1.0) / denom;
  return p;
}

nn::Checkpoint HistogramModel::checkpoint() const {
  nn::Checkpoint ck;
  ck.model_kind = "occupancy/Histogram";
  ck.depth = depth_;
  Mat m(depth_, 256);
  for (int l = 0; l < depth_; ++l)
    for (int s = 0; s < 256; ++s) m(l, s) = static_cast<double>(counts_[static_cast<size_t>(l)][s]);
  ck.tensors.emplace_back("counts", std::move(m));
  return ck;
}

HistogramModel HistogramModel::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.model_kind != "occupancy/Histogram")
    throw FormatError("not a histogram checkpoint: " + ck.model_kind);
  HistogramModel h(ck.depth);
  const Mat& m = ck.tensors.at(0).second;
  if (m.rows() != ck.depth || m.cols() != 256) throw FormatError("histogram counts shape");
  for (int l = 0; l < ck.depth; ++l)
    for (int s = 0; s < 256; ++s)
      h.counts_[static_cast<size_t>(l)][s] = static_cast<int64_t>(m(l, s));
  return h;
}

// ------------------------------------------------------------ context rows

namespace {

void put_byte_feature(Mat& m, int row, int col, uint8_t b) {
  m(row, col) = static_cast<double>(b) / 255.0;
  for (int k = 0; k < 8; ++k) m(row, col + 1 + k) = static_cast<double>((b >> k) & 1);
}

Mat context_rows(const std::vector<OctreeNode>& nodes, int first, int count,
                 const RegionOfInterest& roi, const CorrespondenceMap* corr,
                 bool with_own_byte) {
  Mat m = Mat::Zero(count, with_own_byte ? kTemporalContextDim : kContextDim);
  for (int i = 0; i < count; ++i) {
    const OctreeNode& n = nodes[static_cast<size_t>(first + i)];
    m(i, 0) = static_cast<double>(n.level) / 16.0;
    Eigen::Vector3d c = (cell_center(n.cell, roi, n.level) - roi.center) / roi.side;
    m(i, 1) = c.x();
    m(i, 2) = c.y();
    m(i, 3) = c.z();
    m(i, 4) = static_cast<double>(n.octant) / 7.0;
    uint8_t pb = n.parent >= 0 ? nodes[static_cast<size_t>(n.parent)].byte : 0;
    put_byte_feature(m, i, 5, pb);
    if (corr) {
      if (auto b = corr->byte_at(n.level, n.cell)) put_byte_feature(m, i, 14, *b);
    }
    if (with_own_byte) put_byte_feature(m, i, 23, n.byte);
  }
  return m;
}

// Aligned-geometry half of a TemporalContext (no embeddings).
OccupancyNet::TemporalContext prev_geometry(const ParsedOctree& prev, const RigidTransform& align,
                                            const RegionOfInterest& roi, bool with_knn) {
  OccupancyNet::TemporalContext tc{CorrespondenceMap(prev, align, roi), Mat(), {}, {}};
  if (!with_knn) return tc;
  int n_levels = static_cast<int>(prev.level_begin.size()) - 1;
  for (int l = 0; l < n_levels; ++l) {
    std::vector<Eigen::Vector3d> pos;
    std::vector<int> ids;
    for (int i = prev.level_begin[static_cast<size_t>(l)];
         i < prev.level_begin[static_cast<size_t>(l) + 1]; ++i) {
      pos.push_back(align.apply(cell_center(prev.nodes[static_cast<size_t>(i)].cell, roi, l)));
      ids.push_back(i);
    }
    tc.level_index.emplace_back(std::move(pos));
    tc.level_ids.push_back(std::move(ids));
  }
  return tc;
}

}  // namespace

// ------------------------------------------------------------ occupancy net

OccupancyNet::OccupancyNet(OccVariant variant, int depth, uint64_t seed)
    : variant_(variant), depth_(depth), seed_(seed) {
  if (depth < 2 || depth > 21) throw std::invalid_argument("occupancy net: depth out of range");
  std::mt19937_64 rng(seed);
  ans_init_ = nn::Mlp("ans_init", {kContextDim, 128, 128, 128, 128}, rng);
  for (int k = 0; k < kAggRounds; ++k)
    ans_agg_.emplace_back("ans_agg" + std::to_string(k), std::vector<int>{256, 128, 128}, rng);
  int header_in = variant == OccVariant::O ? 128 : 192;
  header_ = nn::Mlp("header", {header_in, 128, 128, 128, 256}, rng);
  // zero logits at init: a fresh model codes at exactly 8 bits/symbol
  header_.zero_last_layer();
  if (variant != OccVariant::O) {
    t_init_ = nn::Mlp("t_init", {kTemporalContextDim, 64, 64, 64, 64}, rng);
    for (int k = 0; k < kAggRounds; ++k)
      t_agg_.emplace_back("t_agg" + std::to_string(k), std::vector<int>{128, 64, 64}, rng);
  }
  if (variant == OccVariant::OTB || variant == OccVariant::OTBCC) {
    bu_child_ = nn::Mlp("bu_child", {64, 64, 32}, rng);
    bu_merge_ = nn::Mlp("bu_merge", {96, 96, 64}, rng);
    // The bottom-up embedding is h plus a learned correction; starting the
    // correction at zero keeps the recursive child sums from blowing up the
    // initial loss and makes a freshly seeded OTB behave exactly like OT.
    bu_merge_.zero_last_layer();
  }
  if (variant == OccVariant::OTBCC) {
    for (int l = 1; l < depth; ++l) {
      cc_kernel_.emplace_back("cc_kernel" + std::to_string(l), std::vector<int>{3, 16, 32, 64},
                              rng);
      cc_post_.emplace_back("cc_post" + std::to_string(l), std::vector<int>{64, 64, 64}, rng);
      cc_post_.back().zero_last_layer();
    }
  }
}

OccupancyNet::TemporalIds OccupancyNet::temporal_forward(Graph& g, const ParsedOctree& prev,
                                                         const RegionOfInterest& roi) const {
  int n = static_cast<int>(prev.nodes.size());
  Graph::Id h = t_init_.apply(g, g.input(context_rows(prev.nodes, 0, n, roi, nullptr, true)));

  std::vector<int> parents(static_cast<size_t>(n));
  Mat root_mask = Mat::Ones(n, 64);
  for (int i = 0; i < n; ++i) {
    int p = prev.nodes[static_cast<size_t>(i)].parent;
    parents[static_cast<size_t>(i)] = std::max(0, p);
    if (p < 0) root_mask.row(i).setZero();
  }
  Graph::Id mask = g.input(root_mask);
  for (int k = 0; k < kAggRounds; ++k)
    h = t_agg_[static_cast<size_t>(k)].apply(g, g.concat(h, g.cmul(g.gather(h, parents), mask)));

  TemporalIds out{h, -1};
  if (bu_child_.empty()) return out;

  int n_levels = static_cast<int>(prev.level_begin.size()) - 1;
  Graph::Id g_all = g.zeros(n, 64);
  std::vector<Graph::Id> g_level(static_cast<size_t>(n_levels), -1);
  for (int l = n_levels - 1; l >= 0; --l) {
    int b = prev.level_begin[static_cast<size_t>(l)];
    int nl = prev.nodes_at(l);
    if (nl == 0) continue;
    Graph::Id child_sum;
    if (l + 1 < n_levels && prev.nodes_at(l + 1) > 0 && g_level[static_cast<size_t>(l) + 1] >= 0) {
      Graph::Id src = bu_child_.apply(g, g_level[static_cast<size_t>(l) + 1]);
      std::vector<int> dst;
      for (int i = prev.level_begin[static_cast<size_t>(l) + 1];
           i < prev.level_begin[static_cast<size_t>(l) + 2]; ++i)
        dst.push_back(prev.nodes[static_cast<size_t>(i)].parent - b);
      child_sum = g.scatter_sum(src, std::move(dst), nl);
    } else {
      child_sum = g.zeros(nl, 32);
    }
    std::vector<int> rows(static_cast<size_t>(nl));
    for (int i = 0; i < nl; ++i) rows[static_cast<size_t>(i)] = b + i;
    Graph::Id hl = g.gather(h, rows);
    // residual: the bottom-up embedding is h plus the subtree correction
    Graph::Id gl = g.add(hl, bu_merge_.apply(g, g.concat(hl, child_sum)));
    g_level[static_cast<size_t>(l)] = gl;
    g_all = g.add(g_all, g.scatter_sum(gl, std::move(rows), n));
  }
  out.g = g_all;
  return out;
}

Graph::Id OccupancyNet::variant_feature(Graph& g, const std::vector<OctreeNode>& nodes, int first,
                                        int count, const RegionOfInterest& roi,
                                        const TemporalContext* prev, Graph::Id prev_match) const {
  if (!prev || prev_match < 0) return g.zeros(count, 64);
  int level = nodes[static_cast<size_t>(first)].level;

  std::vector<int> idx(static_cast<size_t>(count), 0);
  Mat mask = Mat::Zero(count, 64);
  for (int i = 0; i < count; ++i) {
    const OctreeNode& n = nodes[static_cast<size_t>(first + i)];
    if (auto j = prev->corr.index_at(level, n.cell)) {
      idx[static_cast<size_t>(i)] = *j;
      mask.row(i).setOnes();
    }
  }
  Graph::Id match = g.cmul(g.gather(prev_match, std::move(idx)), g.input(mask));
  if (variant_ == OccVariant::OT || variant_ == OccVariant::OTB) return match;

  // OTBCC refines the exact match with a same-level neighborhood term; the
  // root has no neighborhood worth convolving over.
  if (level < 1 || static_cast<size_t>(level) >= prev->level_index.size()) return match;
  const SpatialIndex& si = prev->level_index[static_cast<size_t>(level)];
  const std::vector<int>& ids = prev->level_ids[static_cast<size_t>(level)];
  double cell = roi.side / static_cast<double>(1u << level);
  std::vector<int> query_of, feat_rows;
  std::vector<Eigen::Vector3d> disp;
  for (int i = 0; i < count; ++i) {
    const OctreeNode& n = nodes[static_cast<size_t>(first + i)];
    Eigen::Vector3d q = cell_center(n.cell, roi, level);
    for (const auto& hit : si.knn(q, kConvNeighbors)) {
      disp.push_back((si.position(hit.id) - q) / cell);
      feat_rows.push_back(ids[static_cast<size_t>(hit.id)]);
      query_of.push_back(i);
    }
  }
  Mat d(static_cast<Eigen::Index>(disp.size()), 3);
  for (size_t i = 0; i < disp.size(); ++i) d.row(static_cast<Eigen::Index>(i)) = disp[i];
  Graph::Id conv =
      continuous_conv(g, cc_kernel_[static_cast<size_t>(level) - 1], g.input(std::move(d)),
                      g.gather(prev_match, std::move(feat_rows)), std::move(query_of), count);
  return g.add(match, cc_post_[static_cast<size_t>(level) - 1].apply(g, conv));
}

OccupancyNet::TemporalContext OccupancyNet::temporal_context(const ParsedOctree& prev,
                                                             const RigidTransform& align,
                                                             const RegionOfInterest& roi) const {
  TemporalContext tc = prev_geometry(prev, align, roi, variant_ == OccVariant::OTBCC);
  if (variant_ == OccVariant::O) return tc;
  Graph g;
  TemporalIds t = temporal_forward(g, prev, roi);
  tc.match = g.value(match_id(t));
  return tc;
}

Mat OccupancyNet::level_probs(const OctreeLevelParser& parser, SweepState& state,
                              const TemporalContext* prev, const RegionOfInterest& roi) const {
  const std::vector<OctreeNode>& nodes = parser.nodes();
  int count = parser.pending_count();
  int first = static_cast<int>(nodes.size()) - count;

  Graph g;
  Mat ctx = context_rows(nodes, first, count, roi, prev ? &prev->corr : nullptr, false);
  std::array<Graph::Id, kAggRounds + 1> ids;
  ids[0] = ans_init_.apply(g, g.input(std::move(ctx)));
  for (int k = 0; k < kAggRounds; ++k) {
    Mat par = Mat::Zero(count, 128);
    for (int i = 0; i < count; ++i) {
      int p = nodes[static_cast<size_t>(first + i)].parent;
      if (p >= 0) par.row(i) = state.rounds[static_cast<size_t>(k)].row(p);
    }
    ids[static_cast<size_t>(k) + 1] = ans_agg_[static_cast<size_t>(k)].apply(
        g, g.concat(ids[static_cast<size_t>(k)], g.input(std::move(par))));
  }

  Graph::Id head_in = ids[kAggRounds];
  if (variant_ != OccVariant::O) {
    Graph::Id match = (prev && prev->match.size() > 0) ? g.input(prev->match) : -1;
    head_in = g.concat(head_in, variant_feature(g, nodes, first, count, roi, prev, match));
  }
  Mat probs = nn::row_softmax(g.value(header_.apply(g, head_in)));

  for (size_t k = 0; k < ids.size(); ++k) {
    Mat& r = state.rounds[k];
    if (r.size() == 0) r = Mat::Zero(0, 128);
    r.conservativeResize(first + count, 128);
    r.bottomRows(count) = g.value(ids[k]);
  }
  return probs;
}

Graph::Id OccupancyNet::loss(Graph& g, const ParsedOctree& cur, const ParsedOctree* prev,
                             const RigidTransform& align, const RegionOfInterest& roi) const {
  int n = static_cast<int>(cur.nodes.size());
  std::optional<TemporalContext> tc;
  Graph::Id match = -1;
  if (prev) {
    tc = prev_geometry(*prev, align, roi, variant_ == OccVariant::OTBCC);
    if (variant_ != OccVariant::O) {
      TemporalIds t = temporal_forward(g, *prev, roi);
      match = match_id(t);
    }
  }

  Graph::Id h =
      ans_init_.apply(g, g.input(context_rows(cur.nodes, 0, n, roi, tc ? &tc->corr : nullptr,
                                              false)));
  std::vector<int> parents(static_cast<size_t>(n));
  Mat root_mask = Mat::Ones(n, 128);
  for (int i = 0; i < n; ++i) {
    int p = cur.nodes[static_cast<size_t>(i)].parent;
    parents[static_cast<size_t>(i)] = std::max(0, p);
    if (p < 0) root_mask.row(i).setZero();
  }
  Graph::Id mask = g.input(std::move(root_mask));
  for (int k = 0; k < kAggRounds; ++k)
    h = ans_agg_[static_cast<size_t>(k)].apply(g, g.concat(h, g.cmul(g.gather(h, parents), mask)));

  Graph::Id head_in = h;
  if (variant_ != OccVariant::O) {
    Graph::Id acc = g.zeros(n, 64);
    for (int l = 0; l < depth_; ++l) {
      int b = cur.level_begin[static_cast<size_t>(l)];
      int nl = cur.nodes_at(l);
      if (nl == 0) continue;
      Graph::Id f = variant_feature(g, cur.nodes, b, nl, roi, tc ? &*tc : nullptr, match);
      std::vector<int> rows(static_cast<size_t>(nl));
      for (int i = 0; i < nl; ++i) rows[static_cast<size_t>(i)] = b + i;
      acc = g.add(acc, g.scatter_sum(f, std::move(rows), n));
    }
    head_in = g.concat(h, acc);
  }

  Graph::Id logits = header_.apply(g, head_in);
  std::vector<int> targets(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) targets[static_cast<size_t>(i)] = cur.nodes[static_cast<size_t>(i)].byte;
  return g.softmax_xent(logits, std::move(targets));
}

std::vector<nn::Tensor*> OccupancyNet::params() {
  std::vector<nn::Tensor*> out;
  auto append = [&](nn::Mlp& m) {
    for (nn::Tensor* t : m.params()) out.push_back(t);
  };
  append(ans_init_);
  for (auto& m : ans_agg_) append(m);
  append(header_);
  if (!t_init_.empty()) append(t_init_);
  for (auto& m : t_agg_) append(m);
  if (!bu_child_.empty()) append(bu_child_);
  if (!bu_merge_.empty()) append(bu_merge_);
  for (auto& m : cc_kernel_) append(m);
  for (auto& m : cc_post_) append(m);
  return out;
}

std::vector<const nn::Tensor*> OccupancyNet::params() const {
  std::vector<const nn::Tensor*> out;
  for (nn::Tensor* t : const_cast<OccupancyNet*>(this)->params()) out.push_back(t);
  return out;
}

nn::Checkpoint OccupancyNet::checkpoint() const {
  nn::Checkpoint ck = nn::Checkpoint::capture(params());
  ck.model_kind = "occupancy/" + to_string(variant_);
  ck.depth = depth_;
  ck.seed = seed_;
  return ck;
}

OccupancyNet OccupancyNet::from_checkpoint(const nn::Checkpoint& ck) {
  const std::string prefix = "occupancy/";
  if (ck.model_kind.rfind(prefix, 0) != 0)
    throw FormatError("not an occupancy checkpoint: " + ck.model_kind);
  OccupancyNet net(occ_variant_from_string(ck.model_kind.substr(prefix.size())), ck.depth,
                   ck.seed);
  ck.restore_into(net.params());
  return net;
}

// ------------------------------------------------------------ intensity net

IntensityNet::IntensityNet(IntVariant variant, uint64_t seed) : variant_(variant), seed_(seed) {
  std::mt19937_64 rng(seed);
  if (variant == IntVariant::Mlp1) {
    trunk_ = nn::Mlp("int_trunk", {5, 128, 128, 128, 128}, rng);
    head_ = nn::Mlp("int_head", {128, 256}, rng);
    // zero logits at init, as for the occupancy header
    head_.zero_last_layer();
  } else if (variant == IntVariant::Cc) {
    trunk_ = nn::Mlp("int_trunk", {8, 128, 128, 128, 128}, rng);
    cc_kernel_ = nn::Mlp("int_cc_kernel", {3, 16, 32, 128}, rng);
    // gated neighbor sum starts at zero so the raw-meter displacement scale
    // cannot blow up the initial logits; this already zeroes the initial
    // head input, so the head itself keeps its init (zeroing both would
    // leave the kernel without any gradient path)
    cc_kernel_.zero_last_layer();
    head_ = nn::Mlp("int_head", {128, 256}, rng);
  }
}

Graph::Id IntensityNet::logits(Graph& g, const std::vector<Eigen::Vector3d>& cur,
                               const std::vector<Eigen::Vector3d>& prev,
                               const std::vector<uint8_t>& prev_intensity,
                               const RegionOfInterest& roi) const {
  int n = static_cast<int>(cur.size());
  if (variant_ == IntVariant::Passthrough) return g.zeros(n, 256);

  Graph::Id emb;
  if (prev.empty()) {
    emb = g.zeros(n, 128);
  } else if (variant_ == IntVariant::Mlp1) {
    SpatialIndex si(prev);
    Mat f(n, 5);
    for (int i = 0; i < n; ++i) {
      auto hit = si.knn(cur[static_cast<size_t>(i)], 1)[0];
      Eigen::Vector3d d = prev[static_cast<size_t>(hit.id)] - cur[static_cast<size_t>(i)];
      f(i, 0) = static_cast<double>(prev_intensity[static_cast<size_t>(hit.id)]) / 255.0;
      f(i, 1) = d.x();
      f(i, 2) = d.y();
      f(i, 3) = d.z();
      f(i, 4) = hit.distance;
    }
    emb = trunk_.apply(g, g.input(std::move(f)));
  } else {
    SpatialIndex si(prev);
    std::vector<int> query_of;
    std::vector<Eigen::Vector3d> disp;
    std::vector<double> inten, dist;
    std::vector<Eigen::Vector3d> ppos;
    for (int i = 0; i < n; ++i) {
      for (const auto& hit : si.knn(cur[static_cast<size_t>(i)], kConvNeighbors)) {
        const Eigen::Vector3d& p = prev[static_cast<size_t>(hit.id)];
        disp.push_back(p - cur[static_cast<size_t>(i)]);
        ppos.push_back(p);
        inten.push_back(static_cast<double>(prev_intensity[static_cast<size_t>(hit.id)]) / 255.0);
        dist.push_back(hit.distance);
        query_of.push_back(i);
      }
    }
    Eigen::Index m = static_cast<Eigen::Index>(disp.size());
    Mat f(m, 8), d(m, 3);
    for (Eigen::Index i = 0; i < m; ++i) {
      size_t s = static_cast<size_t>(i);
      f(i, 0) = inten[s];
      f.block<1, 3>(i, 1) = ((ppos[s] - roi.center) / roi.side).transpose();
      f.block<1, 3>(i, 4) = disp[s].transpose();
      f(i, 7) = dist[s];
      d.row(i) = disp[s].transpose();
    }
    Graph::Id feats = trunk_.apply(g, g.input(std::move(f)));
    emb = continuous_conv(g, cc_kernel_, g.input(std::move(d)), feats, std::move(query_of), n);
  }
  return head_.apply(g, emb);
}

Mat IntensityNet::probs(const std::vector<Eigen::Vector3d>& cur,
                        const std::vector<Eigen::Vector3d>& prev,
                        const std::vector<uint8_t>& prev_intensity,
                        const RegionOfInterest& roi) const {
  if (variant_ == IntVariant::Passthrough)
    return Mat::Constant(static_cast<Eigen::Index>(cur.size()), 256, 1.0 / 256.0);
  Graph g;
  return nn::row_softmax(g.value(logits(g, cur, prev, prev_intensity, roi)));
}

Graph::Id IntensityNet::loss(Graph& g, const std::vector<Eigen::Vector3d>& cur,
                             const std::vector<uint8_t>& cur_intensity,
                             const std::vector<Eigen::Vector3d>& prev,
                             const std::vector<uint8_t>& prev_intensity,
                             const RegionOfInterest& roi) const {
  Graph::Id l = logits(g, cur, prev, prev_intensity, roi);
  std::vector<int> targets(cur_intensity.size());
  for (size_t i = 0; i < cur_intensity.size(); ++i) targets[i] = cur_intensity[i];
  return g.softmax_xent(l, std::move(targets));
}

std::vector<nn::Tensor*> IntensityNet::params() {
  std::vector<nn::Tensor*> out;
  for (nn::Mlp* m : {&trunk_, &cc_kernel_, &head_})
    if (!m->empty())
      for (nn::Tensor* t : m->params()) out.push_back(t);
  return out;
}

std::vector<const nn::Tensor*> IntensityNet::params() const {
  std::vector<const nn::Tensor*> out;
  for (nn::Tensor* t : const_cast<IntensityNet*>(this)->params()) out.push_back(t);
  return out;
}

nn::Checkpoint IntensityNet::checkpoint() const {
  nn::Checkpoint ck = nn::Checkpoint::capture(params());
  ck.model_kind = "intensity/" + to_string(variant_);
  ck.seed = seed_;
  return ck;
}

IntensityNet IntensityNet::from_checkpoint(const nn::Checkpoint& ck) {
  const std::string prefix = "intensity/";
  if (ck.model_kind.rfind(prefix, 0) != 0)
    throw FormatError("not an intensity checkpoint: " + ck.model_kind);
  IntensityNet net(int_variant_from_string(ck.model_kind.substr(prefix.size())), ck.seed);
  ck.restore_into(net.params());
  return net;
}

// ---------------------------------------------------------------- training

OctreeCorpus OctreeCorpus::build(const std::vector<SweepStream>& streams, int depth,
                                 const RegionOfInterest& roi) {
  OctreeCorpus c;
  c.depth = depth;
  c.roi = roi;
  uint64_t h = 0xcbf29ce484222325ull;
  for (const SweepStream& s : streams) {
    std::vector<uint8_t> bytes = serialize_stream(s);
    h = fnv1a64(bytes.data(), bytes.size(), h);
    std::vector<Entry> entries;
    for (size_t t = 0; t < s.sweeps.size(); ++t) {
      SerializedOctree ser = build_octree(s.sweeps[t], roi, depth);
      Entry e;
      e.tree = parse_occupancy_stream(ser.occupancy_stream, depth);
      e.recon = reconstruct(ser, roi);
      e.recon.timestamp = s.sweeps[t].timestamp;
      e.recon.pose = s.sweeps[t].pose;
      if (t > 0) e.align = alignment_transform(s.sweeps[t - 1], s.sweeps[t]);
      entries.push_back(std::move(e));
    }
    c.streams.push_back(std::move(entries));
  }
  c.hash = h;
  return c;
}

namespace {

std::vector<std::pair<size_t, size_t>> flatten(const OctreeCorpus& c) {
  std::vector<std::pair<size_t, size_t>> items;
  for (size_t s = 0; s < c.streams.size(); ++s)
    for (size_t t = 0; t < c.streams[s].size(); ++t) items.emplace_back(s, t);
  if (items.empty()) throw std::invalid_argument("training corpus is empty");
  return items;
}

void check_finite_loss(double v, int64_t step) {
  if (!std::isfinite(v))
    throw nn::TrainingError("loss diverged at step " + std::to_string(step));
}

}  // namespace

TrainResult train_occupancy(OccupancyNet& net, const OctreeCorpus& corpus,
                            const TrainSchedule& sched) {
  auto items = flatten(corpus);
  auto params = net.params();
  std::mt19937_64 rng(sched.seed);
  nn::Adam opt({sched.lr});
  TrainResult res;
  for (int64_t step = 0; step < sched.steps; ++step) {
    double acc = 0.0;
    for (int b = 0; b < sched.batch; ++b) {
      auto [si, t] = items[rng() % items.size()];
      const auto& entries = corpus.streams[si];
      Graph g;
      Graph::Id l = net.loss(g, entries[t].tree, t > 0 ? &entries[t - 1].tree : nullptr,
                             entries[t].align, corpus.roi);
      double lv = g.value(l)(0, 0);
      check_finite_loss(lv, step);
      g.backward(l);
      acc += lv;
    }
    if (sched.batch > 1)
      for (nn::Tensor* p : params) p->grad /= static_cast<double>(sched.batch);
    opt.step(params);
    res.loss_curve.push_back(acc / static_cast<double>(sched.batch));
  }
  return res;
}

TrainResult train_intensity(IntensityNet& net, const OctreeCorpus& corpus,
                            const TrainSchedule& sched) {
  auto params = net.params();
  if (params.empty())
    throw std::invalid_argument("intensity model has no trainable parameters");
  auto items = flatten(corpus);
  std::mt19937_64 rng(sched.seed);
  nn::Adam opt({sched.lr});
  TrainResult res;
  for (int64_t step = 0; step < sched.steps; ++step) {
    double acc = 0.0;
    for (int b = 0; b < sched.batch; ++b) {
      size_t si, t;
      const Sweep* cur = nullptr;
      for (int tries = 0; tries < 1000; ++tries) {
        std::tie(si, t) = items[rng() % items.size()];
        if (!corpus.streams[si][t].recon.points.empty()) {
          cur = &corpus.streams[si][t].recon;
          break;
        }
      }
      if (!cur) throw std::invalid_argument("training corpus has no points");
      const auto& entries = corpus.streams[si];

      std::vector<Eigen::Vector3d> cpos, ppos;
      std::vector<uint8_t> cint, pint;
      for (const Point& p : cur->points) {
        cpos.push_back(p.position);
        cint.push_back(p.intensity);
      }
      if (t > 0) {
        Sweep prev = transform_sweep(entries[t - 1].recon, entries[t].align);
        for (const Point& p : prev.points) {
          ppos.push_back(p.position);
          pint.push_back(p.intensity);
        }
      }
      Graph g;
      Graph::Id l = net.loss(g, cpos, cint, ppos, pint, corpus.roi);
      double lv = g.value(l)(0, 0);
      check_finite_loss(lv, step);
      g.backward(l);
      acc += lv;
    }
    if (sched.batch > 1)
      for (nn::Tensor* p : params) p->grad /= static_cast<double>(sched.batch);
    opt.step(params);
    res.loss_curve.push_back(acc / static_cast<double>(sched.batch));
  }
  return res;
}

}  // namespace mslc
