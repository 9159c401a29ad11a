#include "mslc/nn/checkpoint.hpp"

#include <fstream>
#include <unordered_map>

#include "mslc/binio.hpp"

namespace mslc::nn {

static constexpr uint16_t kCheckpointVersion = 1;

std::vector<uint8_t> Checkpoint::serialize() const {
  ByteWriter w;
  w.bytes(reinterpret_cast<const uint8_t*>("MSCK"), 4);
  w.u16(kCheckpointVersion);
  w.str(model_kind);
  w.u8(static_cast<uint8_t>(depth));
  w.u64(seed);
  w.u64(static_cast<uint64_t>(step));
  w.u64(corpus_hash);
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    w.str(name);
    w.u32(static_cast<uint32_t>(m.rows()));
    w.u32(static_cast<uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
  }
  return w.take();
}

Checkpoint Checkpoint::parse(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "MSCK")
    throw FormatError("bad checkpoint magic");
  uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.model_kind = r.str();
  ck.depth = r.u8();
  ck.seed = r.u64();
  ck.step = static_cast<int64_t>(r.u64());
  ck.corpus_hash = r.u64();
  uint32_t n = r.u32();
  ck.tensors.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    uint32_t rows = r.u32(), cols = r.u32();
    Mat m(rows, cols);
    for (uint32_t rr = 0; rr < rows; ++rr)
      for (uint32_t cc = 0; cc < cols; ++cc) m(rr, cc) = r.f64();
    ck.tensors.emplace_back(std::move(name), std::move(m));
  }
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  auto bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse(bytes);
}

uint64_t Checkpoint::hash() const { return fnv1a64(serialize()); }

void Checkpoint::restore_into(const std::vector<Tensor*>& params) const {
  std::unordered_map<std::string, const Mat*> by_name;
  for (const auto& [name, m] : tensors) by_name[name] = &m;
  for (Tensor* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("checkpoint missing tensor " + p->name);
    if (it->second->rows() != p->value.rows() || it->second->cols() != p->value.cols())
      throw FormatError("checkpoint tensor shape mismatch for " + p->name);
    p->value = *it->second;
    p->zero_grad();
  }
}

Checkpoint Checkpoint::capture(const std::vector<const Tensor*>& params) {
  Checkpoint ck;
  for (const Tensor* p : params) ck.tensors.emplace_back(p->name, p->value);
  return ck;
}

}  // namespace mslc::nn
