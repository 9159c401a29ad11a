#include "mslc/coder/container.hpp"

#include <bit>
#include <fstream>

#include "mslc/binio.hpp"

namespace mslc {

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'M', 'S', 'C', '1'};
constexpr uint16_t kVersion = 1;

void write_frame(ByteWriter& w, const Frame& f) {
  w.u64(static_cast<uint64_t>(f.timestamp));
  w.u8(f.pose ? 1 : 0);
  if (f.pose) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w.f64(f.pose->rotation(r, c));
    for (int r = 0; r < 3; ++r) w.f64(f.pose->translation[r]);
  }
  w.u32(f.orig_point_count);
  w.u32(f.n_occ_symbols);
  w.u32(f.n_leaves);
  w.u8(3);  // section count
  for (const std::vector<uint8_t>* s : {&f.occupancy, &f.leaf_offsets, &f.intensity}) {
    w.u32(static_cast<uint32_t>(s->size()));
    w.bytes(*s);
  }
}

Frame read_frame(ByteReader& r) {
  Frame f;
  f.timestamp = static_cast<int64_t>(r.u64());
  if (r.u8()) {
    RigidTransform t;
    for (int rr = 0; rr < 3; ++rr)
      for (int c = 0; c < 3; ++c) t.rotation(rr, c) = r.f64();
    for (int rr = 0; rr < 3; ++rr) t.translation[rr] = r.f64();
    f.pose = t;
  }
  f.orig_point_count = r.u32();
  f.n_occ_symbols = r.u32();
  f.n_leaves = r.u32();
  uint8_t n_sections = r.u8();
  if (n_sections < 3) throw CorruptionError("frame has fewer than 3 sections");
  std::vector<uint8_t>* dst[3] = {&f.occupancy, &f.leaf_offsets, &f.intensity};
  for (int i = 0; i < n_sections; ++i) {
    uint32_t len = r.u32();
    if (i < 3)
      *dst[i] = r.bytes(len);
    else
      r.skip(len);  // section added by a newer writer
  }
  return f;
}
}  // namespace

std::vector<uint8_t> serialize_container(const ContainerHeader& h,
                                         const std::vector<Frame>& frames) {
  ByteWriter w;
  w.bytes(reinterpret_cast<const uint8_t*>(kMagic), 4);
  w.u16(kVersion);
  w.u8(static_cast<uint8_t>(h.depth));
  w.f64(h.roi.side);
  for (int a = 0; a < 3; ++a) w.f64(h.roi.center[a]);
  w.str(h.occupancy_kind);
  w.str(h.intensity_kind);
  w.u64(h.model_hash);
  w.u32(static_cast<uint32_t>(frames.size()));
  for (const Frame& f : frames) write_frame(w, f);
  return w.take();
}

ParsedContainer parse_container(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != std::string(kMagic, 4))
    throw FormatError("bad container magic");
  ParsedContainer out;
  out.header.version = r.u16();
  if (out.header.version != kVersion)
    throw FormatError("unsupported container version " + std::to_string(out.header.version));
  out.header.depth = r.u8();
  out.header.roi.side = r.f64();
  for (int a = 0; a < 3; ++a) out.header.roi.center[a] = r.f64();
  out.header.occupancy_kind = r.str();
  out.header.intensity_kind = r.str();
  out.header.model_hash = r.u64();
  out.header.sweep_count = r.u32();
  out.frames.reserve(out.header.sweep_count);
  for (uint32_t i = 0; i < out.header.sweep_count; ++i) out.frames.push_back(read_frame(r));
  return out;
}

void save_container(const ParsedContainer& c, const std::string& path) {
  auto bytes = serialize_container(c.header, c.frames);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write container: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ParsedContainer load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open container: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse_container(bytes);
}

}  // namespace mslc
