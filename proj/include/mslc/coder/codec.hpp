#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mslc/coder/container.hpp"
#include "mslc/coder/range_coder.hpp"
#include "mslc/entropy/models.hpp"

namespace mslc {

// Exactly one of `histogram` / `occupancy` must be set. A null intensity
// model means intensities are stored raw (one byte per leaf).
struct ModelSet {
  std::shared_ptr<HistogramModel> histogram;
  std::shared_ptr<OccupancyNet> occupancy;
  std::shared_ptr<IntensityNet> intensity;

  int depth() const { return histogram ? histogram->depth() : occupancy->depth(); }
  std::string occupancy_kind() const;
  std::string intensity_kind() const;
  uint64_t hash() const;
  void validate() const;
};

struct FrameStats {
  uint32_t orig_points = 0;
  uint32_t n_symbols = 0;
  uint32_t n_leaves = 0;
  size_t occ_bytes = 0;
  size_t leaf_bytes = 0;
  size_t intensity_bytes = 0;
  size_t frame_bytes = 0;  // full wire size including frame metadata
};

// Stateful sweep-by-sweep codec. The encoder conditions every sweep on the
// *decoded* previous reconstruction, so encoder and decoder always agree on
// the conditioning data and per-sweep drift cannot accumulate.
class StreamCodec {
 public:
  StreamCodec(ModelSet models, int depth, RegionOfInterest roi);

  int depth() const { return depth_; }
  const RegionOfInterest& roi() const { return roi_; }

  Frame encode_sweep(const Sweep& s);
  Sweep decode_sweep(const Frame& f);
  void reset();

 private:
  std::vector<uint8_t> code_occupancy(const std::vector<uint8_t>* truth, const Frame* frame,
                                      const std::optional<RigidTransform>& cur_pose,
                                      ParsedOctree* tree_out);
  RigidTransform alignment_to(const std::optional<RigidTransform>& cur_pose) const;
  void advance(ParsedOctree tree, Sweep recon);

  ModelSet models_;
  int depth_;
  RegionOfInterest roi_;
  std::vector<QuantizedCdf> hist_cdf_;  // per level, when using the histogram model

  bool has_prev_ = false;
  ParsedOctree prev_tree_;
  Sweep prev_recon_;
};

std::vector<uint8_t> encode_stream(const SweepStream& s, const ModelSet& models, int depth,
                                   std::vector<FrameStats>* stats = nullptr);
SweepStream decode_stream(const std::vector<uint8_t>& bytes, const ModelSet& models,
                          std::vector<FrameStats>* stats = nullptr);

size_t frame_wire_size(const Frame& f);

}  // namespace mslc
