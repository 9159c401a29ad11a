#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mslc/neighbors.hpp"
#include "mslc/nn/checkpoint.hpp"
#include "mslc/nn/layers.hpp"
#include "mslc/octree.hpp"
#include "mslc/pointcloud.hpp"

namespace mslc {

using nn::Graph;
using nn::Mat;

// Per-node context feature layout (23 columns):
//   [0]     level / 16
//   [1..3]  cell center relative to ROI center, divided by the ROI side
//   [4]     octant index / 7
//   [5..13] parent occupancy byte: scalar / 255, then 8 bits (LSB first)
//   [14..22] previous-sweep corresponding byte, same encoding, zero if none
// The previous octree's own top-down pass appends the node's own byte with
// the same 9-column encoding (32 columns total).
constexpr int kContextDim = 23;
constexpr int kTemporalContextDim = 32;
constexpr int kAggRounds = 4;
constexpr int kConvNeighbors = 5;

enum class OccVariant { O, OT, OTB, OTBCC };
std::string to_string(OccVariant v);
OccVariant occ_variant_from_string(const std::string& s);

// Per-level occupancy byte frequencies with Laplace smoothing (alpha = 1).
class HistogramModel {
 public:
  explicit HistogramModel(int depth);

  int depth() const { return depth_; }
  void add(const ParsedOctree& tree);
  // 256 smoothed probabilities for nodes at `level`.
  Eigen::RowVectorXd probs(int level) const;

  nn::Checkpoint checkpoint() const;
  static HistogramModel from_checkpoint(const nn::Checkpoint& ck);

 private:
  int depth_;
  std::vector<std::array<int64_t, 256>> counts_;
};

// Learned conditional occupancy model. Ancestral embeddings (4 rounds of
// parent aggregation over a 128-dim state) feed a 4-layer header MLP that
// emits 256 logits per node. The temporal variants extend the header input
// with previous-sweep information:
//   O      context prev-byte feature only
//   OT     exact-match top-down embedding of the matching previous node
//   OTB    exact-match bottom-up (subtree-aggregated) embedding
//   OTBCC  continuous convolution over the k nearest previous nodes at the
//          same level, gating their bottom-up embeddings
class OccupancyNet {
 public:
  OccupancyNet(OccVariant variant, int depth, uint64_t seed);

  OccVariant variant() const { return variant_; }
  int depth() const { return depth_; }
  uint64_t seed() const { return seed_; }

  // Previous-sweep state, computed once per sweep pair on both coder sides
  // from the *decoded* previous reconstruction.
  struct TemporalContext {
    CorrespondenceMap corr;
    Mat match;                                // per prev node, 64 columns
    std::vector<SpatialIndex> level_index;    // aligned centers per level
    std::vector<std::vector<int>> level_ids;  // global node index per entry
  };
  TemporalContext temporal_context(const ParsedOctree& prev, const RigidTransform& align,
                                   const RegionOfInterest& roi) const;

  // Ancestral embeddings of every node predicted so far in the current
  // sweep; rounds[k] rows align with the parser's node order.
  struct SweepState {
    std::array<Mat, kAggRounds + 1> rounds;
  };

  // One probability row (256 columns) per pending node of `parser`, given
  // everything already decoded. Appends the pending nodes' embeddings to
  // `state`. `prev` is null for the first sweep. Both coder sides call this
  // with identical inputs, so the rows match bit for bit.
  Mat level_probs(const OctreeLevelParser& parser, SweepState& state,
                  const TemporalContext* prev, const RegionOfInterest& roi) const;

  // Mean cross-entropy in nats over all occupancy symbols of `cur`,
  // differentiable through every sub-network.
  Graph::Id loss(Graph& g, const ParsedOctree& cur, const ParsedOctree* prev,
                 const RigidTransform& align, const RegionOfInterest& roi) const;

  std::vector<nn::Tensor*> params();
  std::vector<const nn::Tensor*> params() const;
  nn::Checkpoint checkpoint() const;
  static OccupancyNet from_checkpoint(const nn::Checkpoint& ck);

 private:
  struct TemporalIds {
    Graph::Id h;  // top-down, per prev node, 64 columns
    Graph::Id g;  // bottom-up, per prev node, 64 columns
  };
  TemporalIds temporal_forward(Graph& g, const ParsedOctree& prev,
                               const RegionOfInterest& roi) const;
  Graph::Id match_id(const TemporalIds& t) const {
    return variant_ == OccVariant::OT ? t.h : t.g;
  }
  // Variant feature rows (64 columns) for `count` nodes starting at `first`
  // in `nodes`; `prev_match` holds the previous tree's match embeddings.
  Graph::Id variant_feature(Graph& g, const std::vector<OctreeNode>& nodes, int first, int count,
                            const RegionOfInterest& roi, const TemporalContext* prev,
                            Graph::Id prev_match) const;

  OccVariant variant_;
  int depth_;
  uint64_t seed_;

  nn::Mlp ans_init_;                  // 23 -> 128 x4
  std::vector<nn::Mlp> ans_agg_;      // 4 x (256 -> 128 -> 128)
  nn::Mlp header_;                    // 128 or 192 -> 128 x3 -> 256
  nn::Mlp t_init_;                    // 32 -> 64 x4
  std::vector<nn::Mlp> t_agg_;        // 4 x (128 -> 64 -> 64)
  nn::Mlp bu_child_;                  // 64 -> 64 -> 32
  nn::Mlp bu_merge_;                  // 96 -> 96 -> 64
  std::vector<nn::Mlp> cc_kernel_;    // per level 1..D-1: 3 -> 16 -> 32 -> 64
  std::vector<nn::Mlp> cc_post_;      // per level 1..D-1: 64 -> 64 -> 64
};

enum class IntVariant { Passthrough, Mlp1, Cc };
std::string to_string(IntVariant v);
IntVariant int_variant_from_string(const std::string& s);

// Intensity byte model conditioned on the aligned previous reconstruction.
//   Passthrough  uniform (bytes stored raw)
//   MLP1         nearest previous point only
//   CC           continuous convolution over the k nearest previous points
// With no previous sweep the temporal embedding is zeroed and the head's
// bias determines the distribution.
class IntensityNet {
 public:
  IntensityNet(IntVariant variant, uint64_t seed);

  IntVariant variant() const { return variant_; }
  uint64_t seed() const { return seed_; }

  // One probability row per current point. `prev` is already aligned into
  // the current frame.
  Mat probs(const std::vector<Eigen::Vector3d>& cur, const std::vector<Eigen::Vector3d>& prev,
            const std::vector<uint8_t>& prev_intensity, const RegionOfInterest& roi) const;

  Graph::Id loss(Graph& g, const std::vector<Eigen::Vector3d>& cur,
                 const std::vector<uint8_t>& cur_intensity,
                 const std::vector<Eigen::Vector3d>& prev,
                 const std::vector<uint8_t>& prev_intensity, const RegionOfInterest& roi) const;

  std::vector<nn::Tensor*> params();
  std::vector<const nn::Tensor*> params() const;
  nn::Checkpoint checkpoint() const;
  static IntensityNet from_checkpoint(const nn::Checkpoint& ck);

 private:
  Graph::Id logits(Graph& g, const std::vector<Eigen::Vector3d>& cur,
                   const std::vector<Eigen::Vector3d>& prev,
                   const std::vector<uint8_t>& prev_intensity, const RegionOfInterest& roi) const;

  IntVariant variant_;
  uint64_t seed_;
  nn::Mlp trunk_;      // CC: 8 -> 128 x4, MLP1: 5 -> 128 x4
  nn::Mlp cc_kernel_;  // 3 -> 16 -> 32 -> 128
  nn::Mlp head_;       // 128 -> 256 linear
};

// Octrees plus reconstructions for every sweep of every training stream,
// built once so the training loop never re-quantizes.
struct OctreeCorpus {
  struct Entry {
    ParsedOctree tree;
    Sweep recon;           // reconstruction in the sweep's sensor frame
    RigidTransform align;  // maps the previous reconstruction into this frame
  };
  int depth = 0;
  RegionOfInterest roi;
  std::vector<std::vector<Entry>> streams;
  uint64_t hash = 0;

  static OctreeCorpus build(const std::vector<SweepStream>& streams, int depth,
                            const RegionOfInterest& roi);
};

struct TrainSchedule {
  int64_t steps = 5000;
  double lr = 1e-4;
  int batch = 1;  // sweep pairs averaged per optimizer step
  uint64_t seed = 1;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean nats per symbol, one entry per step
};

// Deterministic single-threaded Adam loops. Throw nn::TrainingError on
// divergence (non-finite loss or gradient).
TrainResult train_occupancy(OccupancyNet& net, const OctreeCorpus& corpus,
                            const TrainSchedule& sched);
TrainResult train_intensity(IntensityNet& net, const OctreeCorpus& corpus,
                            const TrainSchedule& sched);

}  // namespace mslc
