#include "mslc/coder/codec.hpp"

#include <stdexcept>

#include "mslc/binio.hpp"

namespace mslc {

void ModelSet::validate() const {
  if (static_cast<bool>(histogram) == static_cast<bool>(occupancy))
    throw std::invalid_argument("exactly one occupancy model must be set");
}

std::string ModelSet::occupancy_kind() const {
  return histogram ? "Histogram" : to_string(occupancy->variant());
}

std::string ModelSet::intensity_kind() const {
  return intensity ? to_string(intensity->variant()) : "Passthrough";
}

uint64_t ModelSet::hash() const {
  ByteWriter w;
  w.str(occupancy_kind());
  w.u64(histogram ? histogram->checkpoint().hash() : occupancy->checkpoint().hash());
  w.str(intensity_kind());
  w.u64(intensity ? intensity->checkpoint().hash() : 0);
  return fnv1a64(w.data());
}

StreamCodec::StreamCodec(ModelSet models, int depth, RegionOfInterest roi)
    : models_(std::move(models)), depth_(depth), roi_(roi) {
  models_.validate();
  if (models_.depth() != depth)
    throw std::invalid_argument("occupancy model depth " + std::to_string(models_.depth()) +
                                " does not match codec depth " + std::to_string(depth));
  if (models_.histogram)
    for (int l = 0; l < depth_; ++l)
      hist_cdf_.push_back(quantize_probs(models_.histogram->probs(l)));
}

void StreamCodec::reset() {
  has_prev_ = false;
  prev_tree_ = {};
  prev_recon_ = {};
}

RigidTransform StreamCodec::alignment_to(const std::optional<RigidTransform>& cur_pose) const {
  if (!has_prev_) return {};
  Sweep prev, cur;
  prev.pose = prev_recon_.pose;
  cur.pose = cur_pose;
  return alignment_transform(prev, cur);
}

void StreamCodec::advance(ParsedOctree tree, Sweep recon) {
  prev_tree_ = std::move(tree);
  prev_recon_ = std::move(recon);
  has_prev_ = true;
}

namespace {
QuantizedCdf row_cdf(const Mat& probs, int row) {
  Eigen::RowVectorXd p = probs.row(row);
  return quantize_probs(p);
}

bool is_passthrough(const ModelSet& m) {
  return !m.intensity || m.intensity->variant() == IntVariant::Passthrough;
}

// Previous reconstruction aligned into the current sensor frame.
void aligned_prev(const Sweep& prev_recon, const RigidTransform& align,
                  std::vector<Eigen::Vector3d>* pos, std::vector<uint8_t>* intensity) {
  pos->reserve(prev_recon.points.size());
  intensity->reserve(prev_recon.points.size());
  for (const Point& p : prev_recon.points) {
    pos->push_back(align.apply(p.position));
    intensity->push_back(p.intensity);
  }
}
}  // namespace

Frame StreamCodec::encode_sweep(const Sweep& s) {
  Frame f;
  f.timestamp = s.timestamp;
  f.pose = s.pose;
  for (const Point& p : s.points)
    if (roi_.contains(p.position)) ++f.orig_point_count;

  SerializedOctree ser = build_octree(s, roi_, depth_);
  f.n_occ_symbols = static_cast<uint32_t>(ser.occupancy_stream.size());
  f.n_leaves = static_cast<uint32_t>(ser.leaf_stream.size());
  if (ser.occupancy_stream.empty()) {
    // nothing in the ROI; the next sweep codes without temporal context
    reset();
    return f;
  }

  RigidTransform align = alignment_to(s.pose);
  OctreeLevelParser parser(depth_);
  {
    RangeEncoder enc;
    std::optional<OccupancyNet::TemporalContext> tc;
    if (models_.occupancy && has_prev_)
      tc = models_.occupancy->temporal_context(prev_tree_, align, roi_);
    OccupancyNet::SweepState st;
    size_t off = 0;
    while (!parser.done()) {
      int cnt = parser.pending_count();
      if (models_.histogram) {
        const QuantizedCdf& cdf = hist_cdf_[static_cast<size_t>(parser.pending_level())];
        for (int i = 0; i < cnt; ++i) enc.encode(ser.occupancy_stream[off + static_cast<size_t>(i)], cdf);
      } else {
        Mat probs = models_.occupancy->level_probs(parser, st, tc ? &*tc : nullptr, roi_);
        for (int i = 0; i < cnt; ++i)
          enc.encode(ser.occupancy_stream[off + static_cast<size_t>(i)], row_cdf(probs, i));
      }
      parser.supply(ser.occupancy_stream.data() + off, cnt);
      off += static_cast<size_t>(cnt);
    }
    f.occupancy = enc.finish();
  }
  ParsedOctree tree = parser.finish();

  f.leaf_offsets = pack_leaf_offsets(ser);
  Sweep recon = reconstruct(ser, roi_);

  std::vector<uint8_t> raw(ser.leaf_stream.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = ser.leaf_stream[i].intensity;
  if (is_passthrough(models_)) {
    f.intensity = raw;
  } else {
    std::vector<Eigen::Vector3d> cpos, ppos;
    std::vector<uint8_t> pint;
    for (const Point& p : recon.points) cpos.push_back(p.position);
    if (has_prev_) aligned_prev(prev_recon_, align, &ppos, &pint);
    Mat probs = models_.intensity->probs(cpos, ppos, pint, roi_);
    RangeEncoder enc;
    for (size_t i = 0; i < raw.size(); ++i)
      enc.encode(raw[i], row_cdf(probs, static_cast<int>(i)));
    f.intensity = enc.finish();
  }

  recon.timestamp = s.timestamp;
  recon.pose = s.pose;
  advance(std::move(tree), std::move(recon));
  return f;
}

Sweep StreamCodec::decode_sweep(const Frame& f) {
  Sweep out;
  out.timestamp = f.timestamp;
  out.pose = f.pose;
  if (f.n_occ_symbols == 0) {
    reset();
    return out;
  }

  RigidTransform align = alignment_to(f.pose);
  OctreeLevelParser parser(depth_);
  {
    RangeDecoder dec(f.occupancy);
    std::optional<OccupancyNet::TemporalContext> tc;
    if (models_.occupancy && has_prev_)
      tc = models_.occupancy->temporal_context(prev_tree_, align, roi_);
    OccupancyNet::SweepState st;
    std::vector<uint8_t> buf;
    size_t total = 0;
    while (!parser.done()) {
      int cnt = parser.pending_count();
      total += static_cast<size_t>(cnt);
      if (total > f.n_occ_symbols)
        throw CorruptionError("decoded occupancy structure exceeds declared symbol count");
      buf.resize(static_cast<size_t>(cnt));
      if (models_.histogram) {
        const QuantizedCdf& cdf = hist_cdf_[static_cast<size_t>(parser.pending_level())];
        for (int i = 0; i < cnt; ++i) buf[static_cast<size_t>(i)] = static_cast<uint8_t>(dec.decode(cdf));
      } else {
        Mat probs = models_.occupancy->level_probs(parser, st, tc ? &*tc : nullptr, roi_);
        for (int i = 0; i < cnt; ++i)
          buf[static_cast<size_t>(i)] = static_cast<uint8_t>(dec.decode(row_cdf(probs, i)));
      }
      parser.supply(buf.data(), cnt);
    }
    if (total != f.n_occ_symbols)
      throw CorruptionError("occupancy symbol count mismatch: decoded " + std::to_string(total) +
                            ", frame declares " + std::to_string(f.n_occ_symbols));
  }
  ParsedOctree tree = parser.finish();
  if (tree.leaves.size() != f.n_leaves)
    throw CorruptionError("leaf count mismatch: structure has " +
                          std::to_string(tree.leaves.size()) + ", frame declares " +
                          std::to_string(f.n_leaves));

  bool passthrough = is_passthrough(models_);
  if (passthrough && f.intensity.size() != f.n_leaves)
    throw CorruptionError("raw intensity section size mismatch");
  std::vector<LeafRecord> recs = unpack_leaf_records(
      tree, f.leaf_offsets,
      passthrough ? f.intensity : std::vector<uint8_t>(f.n_leaves, 0));

  std::vector<Eigen::Vector3d> cpos;
  cpos.reserve(recs.size());
  for (size_t i = 0; i < recs.size(); ++i)
    cpos.push_back(cell_center(leaf_cell_d(tree.leaves[i], recs[i], depth_), roi_, depth_));

  if (!passthrough) {
    std::vector<Eigen::Vector3d> ppos;
    std::vector<uint8_t> pint;
    if (has_prev_) aligned_prev(prev_recon_, align, &ppos, &pint);
    Mat probs = models_.intensity->probs(cpos, ppos, pint, roi_);
    RangeDecoder dec(f.intensity);
    for (size_t i = 0; i < recs.size(); ++i)
      recs[i].intensity = static_cast<uint8_t>(dec.decode(row_cdf(probs, static_cast<int>(i))));
  }

  out.points.reserve(recs.size());
  for (size_t i = 0; i < recs.size(); ++i)
    out.points.push_back({cpos[i], recs[i].intensity});

  advance(std::move(tree), out);
  return out;
}

size_t frame_wire_size(const Frame& f) {
  return 8 + 1 + (f.pose ? 96u : 0u) + 12 + 1 + 3 * 4 + f.occupancy.size() +
         f.leaf_offsets.size() + f.intensity.size();
}

namespace {
FrameStats stats_of(const Frame& f) {
  FrameStats st;
  st.orig_points = f.orig_point_count;
  st.n_symbols = f.n_occ_symbols;
  st.n_leaves = f.n_leaves;
  st.occ_bytes = f.occupancy.size();
  st.leaf_bytes = f.leaf_offsets.size();
  st.intensity_bytes = f.intensity.size();
  st.frame_bytes = frame_wire_size(f);
  return st;
}
}  // namespace

std::vector<uint8_t> encode_stream(const SweepStream& s, const ModelSet& models, int depth,
                                   std::vector<FrameStats>* stats) {
  models.validate();
  StreamCodec codec(models, depth, s.roi);
  ContainerHeader h;
  h.depth = depth;
  h.roi = s.roi;
  h.occupancy_kind = models.occupancy_kind();
  h.intensity_kind = models.intensity_kind();
  h.model_hash = models.hash();
  h.sweep_count = static_cast<uint32_t>(s.sweeps.size());
  std::vector<Frame> frames;
  frames.reserve(s.sweeps.size());
  for (const Sweep& sw : s.sweeps) {
    frames.push_back(codec.encode_sweep(sw));
    if (stats) stats->push_back(stats_of(frames.back()));
  }
  return serialize_container(h, frames);
}

SweepStream decode_stream(const std::vector<uint8_t>& bytes, const ModelSet& models,
                          std::vector<FrameStats>* stats) {
  models.validate();
  ParsedContainer c = parse_container(bytes);
  if (c.header.occupancy_kind != models.occupancy_kind() ||
      c.header.intensity_kind != models.intensity_kind())
    throw FormatError("container expects models " + c.header.occupancy_kind + "/" +
                      c.header.intensity_kind + ", got " + models.occupancy_kind() + "/" +
                      models.intensity_kind());
  if (c.header.model_hash != models.hash())
    throw FormatError("container was encoded with different model weights");
  StreamCodec codec(models, c.header.depth, c.header.roi);
  SweepStream out;
  out.roi = c.header.roi;
  for (const Frame& f : c.frames) {
    out.sweeps.push_back(codec.decode_sweep(f));
    if (stats) stats->push_back(stats_of(f));
  }
  return out;
}

}  // namespace mslc
