// Command-line front end: dataset conversion, model training, stream
// encode/decode, quality evaluation, rate-distortion sweeps, ablation
// tables, and the leaf-offset compressibility probe.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mslc/coder/codec.hpp"
#include "mslc/compressor.hpp"
#include "mslc/entropy/models.hpp"
#include "mslc/metrics.hpp"
#include "mslc/nn/checkpoint.hpp"
#include "mslc/pointcloud.hpp"

using namespace mslc;

namespace {

// ------------------------------------------------------------ configuration

// key = value file, '#' comments. Environment variables MSLC_<KEY> (upper
// case, '-' and '.' become '_') override the file; explicit command-line
// flags override both.
class Settings {
 public:
  explicit Settings(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      kv_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }

  std::string raw(const std::string& key) const {
    std::string env = "MSLC_";
    for (char c : key) env += (c == '-' || c == '.') ? '_' : static_cast<char>(std::toupper(c));
    if (const char* v = std::getenv(env.c_str())) return v;
    auto it = kv_.find(key);
    return it == kv_.end() ? std::string() : it->second;
  }

  template <class T>
  T resolve(const CLI::Option* opt, const T& cli_value, const std::string& key, T fallback) const {
    if (opt && opt->count() > 0) return cli_value;
    std::string s = raw(key);
    if (s.empty()) return fallback;
    std::istringstream iss(s);
    T v;
    if (!(iss >> v)) throw std::invalid_argument("config key '" + key + "': bad value '" + s + "'");
    return v;
  }

 private:
  static std::string trim(std::string s) {
    const char* ws = " \t\r";
    s.erase(0, s.find_first_not_of(ws));
    auto e = s.find_last_not_of(ws);
    s.erase(e == std::string::npos ? 0 : e + 1);
    return s;
  }
  std::map<std::string, std::string> kv_;
};

std::vector<int> parse_depths(const std::string& s) {
  std::vector<int> out;
  std::string tok;
  std::istringstream iss(s);
  while (std::getline(iss, tok, ',')) {
    auto dash = tok.find('-');
    if (dash != std::string::npos) {
      int a = std::stoi(tok.substr(0, dash)), b = std::stoi(tok.substr(dash + 1));
      for (int d = a; d <= b; ++d) out.push_back(d);
    } else {
      out.push_back(std::stoi(tok));
    }
  }
  for (int d : out)
    if (d < 1 || d > 16) throw std::invalid_argument("depth " + std::to_string(d) + " outside [1,16]");
  if (out.empty()) throw std::invalid_argument("empty depth list");
  return out;
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

void log_artifact(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::printf("wrote %s (%zu bytes, fnv64=%016llx)\n", path.c_str(), bytes.size(),
              static_cast<unsigned long long>(fnv1a64(bytes)));
}

ModelSet load_models(const std::string& occupancy_path, const std::string& intensity_path) {
  ModelSet ms;
  nn::Checkpoint ck = nn::Checkpoint::load(occupancy_path);
  if (ck.model_kind == "occupancy/Histogram")
    ms.histogram = std::make_shared<HistogramModel>(HistogramModel::from_checkpoint(ck));
  else
    ms.occupancy = std::make_shared<OccupancyNet>(OccupancyNet::from_checkpoint(ck));
  if (!intensity_path.empty())
    ms.intensity =
        std::make_shared<IntensityNet>(IntensityNet::from_checkpoint(nn::Checkpoint::load(intensity_path)));
  return ms;
}

std::vector<SweepStream> load_streams(const std::vector<std::string>& paths) {
  std::vector<SweepStream> out;
  for (const auto& p : paths) out.push_back(load_stream(p));
  if (out.empty()) throw std::invalid_argument("no input streams");
  return out;
}

size_t stream_points(const SweepStream& s) {
  size_t n = 0;
  for (const auto& sw : s.sweeps) n += sw.points.size();
  return n;
}

// --------------------------------------------------------------- evaluation

struct EvalRow {
  int sweep;
  int depth;
  double bpp_total, bpp_spatial, f1, chamfer, psnr;
};

// Per-sweep quality/bitrate rows for a decoded stream against its original.
std::vector<EvalRow> eval_rows(const SweepStream& original, const SweepStream& decoded,
                               const std::vector<FrameStats>& stats, int depth,
                               const MetricConfig& cfg) {
  std::vector<EvalRow> rows;
  for (size_t i = 0; i < original.sweeps.size(); ++i) {
    const Sweep& p = original.sweeps[i];
    const Sweep& q = decoded.sweeps[i];
    EvalRow r{};
    r.sweep = static_cast<int>(i);
    r.depth = depth;
    if (stats[i].orig_points > 0) {
      r.bpp_total = 8.0 * static_cast<double>(stats[i].frame_bytes) / stats[i].orig_points;
      r.bpp_spatial =
          8.0 * static_cast<double>(stats[i].occ_bytes + stats[i].leaf_bytes) / stats[i].orig_points;
    }
    r.f1 = f1_score(p, q, cfg);
    if (!p.points.empty() && !q.points.empty()) {
      r.chamfer = chamfer_sym(p, q);
      r.psnr = psnr_d2(p, q, cfg).db;
    }
    rows.push_back(r);
  }
  return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os << "sweep,depth,bpp_total,bpp_spatial,f1,chamfer,psnr\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f,%.6f,%.3f\n", r.sweep, r.depth,
                  r.bpp_total, r.bpp_spatial, r.f1, r.chamfer, r.psnr);
    os << buf;
  }
  return os.str();
}

struct RdRow {
  int depth;
  double bpp_total, bpp_spatial, f1, chamfer, psnr;
};

// Encode+decode in memory at one depth and average quality over sweeps.
RdRow rd_point(const SweepStream& original, const ModelSet& ms, const MetricConfig& cfg) {
  std::vector<FrameStats> stats;
  std::vector<uint8_t> bytes = encode_stream(original, ms, ms.depth(), &stats);
  SweepStream decoded = decode_stream(bytes, ms);
  BitrateReport br = bitrate(stats);
  RdRow row{ms.depth(), br.bpp_total, br.bpp_spatial, 0, 0, 0};
  int counted = 0;
  for (size_t i = 0; i < original.sweeps.size(); ++i) {
    const Sweep& p = original.sweeps[i];
    const Sweep& q = decoded.sweeps[i];
    row.f1 += f1_score(p, q, cfg);
    if (!p.points.empty() && !q.points.empty()) {
      row.chamfer += chamfer_sym(p, q);
      row.psnr += psnr_d2(p, q, cfg).db;
      ++counted;
    }
  }
  row.f1 /= static_cast<double>(original.sweeps.size());
  if (counted) {
    row.chamfer /= counted;
    row.psnr /= counted;
  }
  return row;
}

std::string svg_plot(const std::vector<RdRow>& rows) {
  // bitrate on x; PSNR (left axis) and F1 (right axis) polylines
  const double w = 640, h = 420, ml = 60, mr = 60, mt = 30, mb = 50;
  double x0 = 1e300, x1 = -1e300, p0 = 1e300, p1 = -1e300;
  for (const auto& r : rows) {
    x0 = std::min(x0, r.bpp_total);
    x1 = std::max(x1, r.bpp_total);
    p0 = std::min(p0, r.psnr);
    p1 = std::max(p1, r.psnr);
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (p1 <= p0) p1 = p0 + 1;
  auto X = [&](double v) { return ml + (v - x0) / (x1 - x0) * (w - ml - mr); };
  auto YP = [&](double v) { return h - mb - (v - p0) / (p1 - p0) * (h - mt - mb); };
  auto YF = [&](double v) { return h - mb - v * (h - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
     << "' stroke='black'/>\n"
     << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
     << "' stroke='black'/>\n";
  auto poly = [&](const char* color, bool f1) {
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (const auto& r : rows) os << X(r.bpp_total) << "," << (f1 ? YF(r.f1) : YP(r.psnr)) << " ";
    os << "'/>\n";
    for (const auto& r : rows)
      os << "<circle cx='" << X(r.bpp_total) << "' cy='" << (f1 ? YF(r.f1) : YP(r.psnr))
         << "' r='3' fill='" << color << "'/>\n";
  };
  poly("#1f77b4", false);
  poly("#d62728", true);
  os << "<text x='" << w / 2 << "' y='" << h - 12 << "' text-anchor='middle'>bits per point</text>\n"
     << "<text x='18' y='" << h / 2 << "' fill='#1f77b4' transform='rotate(-90 18 " << h / 2
     << ")' text-anchor='middle'>PSNR (dB)</text>\n"
     << "<text x='" << w - 18 << "' y='" << h / 2 << "' fill='#d62728' transform='rotate(90 "
     << w - 18 << " " << h / 2 << ")' text-anchor='middle'>F1</text>\n";
  for (const auto& r : rows)
    os << "<text x='" << X(r.bpp_total) << "' y='" << mt - 8 + 20
       << "' font-size='11' text-anchor='middle'>D=" << r.depth << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ----------------------------------------------------------------- training

struct TrainedArtifacts {
  nn::Checkpoint ckpt;
  std::vector<double> loss_curve;
  size_t n_params = 0;
};

TrainedArtifacts train_one(const std::string& variant, const OctreeCorpus& corpus,
                           const TrainSchedule& sched) {
  TrainedArtifacts out;
  if (variant == "Histogram") {
    HistogramModel h(corpus.depth);
    for (const auto& stream : corpus.streams)
      for (const auto& e : stream) h.add(e.tree);
    out.ckpt = h.checkpoint();
  } else if (variant == "MLP1" || variant == "CC") {
    IntensityNet net(int_variant_from_string(variant), sched.seed);
    out.loss_curve = train_intensity(net, corpus, sched).loss_curve;
    out.ckpt = net.checkpoint();
    out.n_params = 0;
    for (const auto* t : net.params()) out.n_params += static_cast<size_t>(t->value.size());
  } else {
    OccupancyNet net(occ_variant_from_string(variant), corpus.depth, sched.seed);
    out.loss_curve = train_occupancy(net, corpus, sched).loss_curve;
    out.ckpt = net.checkpoint();
    for (const auto* t : net.params()) out.n_params += static_cast<size_t>(t->value.size());
  }
  out.ckpt.step = sched.steps;
  out.ckpt.corpus_hash = corpus.hash;
  return out;
}

std::string model_card(const TrainedArtifacts& a, const TrainSchedule& sched) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "model: %s\ndepth: %d\nseed: %llu\nsteps: %lld\nlr: %g\nbatch: %d\n"
                "parameters: %zu\ncorpus_hash: %016llx\nweights_hash: %016llx\nfinal_loss_nats: %s\n",
                a.ckpt.model_kind.c_str(), a.ckpt.depth,
                static_cast<unsigned long long>(a.ckpt.seed),
                static_cast<long long>(sched.steps), sched.lr, sched.batch, a.n_params,
                static_cast<unsigned long long>(a.ckpt.corpus_hash),
                static_cast<unsigned long long>(a.ckpt.hash()),
                a.loss_curve.empty() ? "n/a" : std::to_string(a.loss_curve.back()).c_str());
  return buf;
}

std::string loss_csv(const std::vector<double>& curve) {
  std::ostringstream os;
  os << "step,loss_nats\n";
  for (size_t i = 0; i < curve.size(); ++i) os << i << "," << curve[i] << "\n";
  return os.str();
}

// Occupancy-section bits per original point over held-out streams.
double occupancy_bpp(const ModelSet& ms, const std::vector<SweepStream>& test) {
  uint64_t bits = 0, points = 0;
  for (const auto& s : test) {
    std::vector<FrameStats> stats;
    encode_stream(s, ms, ms.depth(), &stats);
    for (const auto& f : stats) {
      bits += 8ull * f.occ_bytes;
      points += f.orig_points;
    }
  }
  if (!points) throw std::invalid_argument("held-out streams are empty");
  return static_cast<double>(bits) / static_cast<double>(points);
}

// Intensity bits per point: learned models report the coded section, the
// generic-compressor baseline deflates the raw intensity bytes per sweep.
double intensity_bpp(const ModelSet& ms, const std::vector<SweepStream>& test) {
  uint64_t bits = 0, points = 0;
  for (const auto& s : test) {
    std::vector<FrameStats> stats;
    encode_stream(s, ms, ms.depth(), &stats);
    for (const auto& f : stats) {
      bits += 8ull * f.intensity_bytes;
      points += f.orig_points;
    }
  }
  if (!points) throw std::invalid_argument("held-out streams are empty");
  return static_cast<double>(bits) / static_cast<double>(points);
}

double baseline_intensity_bpp(const std::vector<SweepStream>& test, int depth) {
  auto zip = make_deflate_compressor();
  uint64_t bits = 0, points = 0;
  for (const auto& s : test) {
    for (const auto& sw : s.sweeps) {
      SerializedOctree ser = build_octree(sw, s.roi, depth);
      std::vector<uint8_t> raw(ser.leaf_stream.size());
      for (size_t i = 0; i < raw.size(); ++i) raw[i] = ser.leaf_stream[i].intensity;
      if (!raw.empty()) bits += 8ull * zip->compress(raw).size();
      for (const Point& p : sw.points)
        if (s.roi.contains(p.position)) ++points;
    }
  }
  if (!points) throw std::invalid_argument("held-out streams are empty");
  return static_cast<double>(bits) / static_cast<double>(points);
}

}  // namespace

// ------------------------------------------------------------------- main

int run(int argc, char** argv) {
  CLI::App app{"LiDAR point-cloud stream codec with learned entropy models"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic,
               "force single-threaded training (always on; flag kept for pipelines)");

  // ---- convert
  auto* c_conv = app.add_subcommand("convert", "build a stream file from KITTI .bin sweeps or the synthetic generator");
  std::vector<std::string> conv_kitti;
  bool conv_synth = false;
  uint64_t conv_seed = 1;
  int conv_sweeps = 10;
  double conv_roi = 400.0;
  std::string conv_out;
  c_conv->add_option("--kitti", conv_kitti, "KITTI .bin files, one sweep each, in stream order");
  c_conv->add_flag("--synthetic", conv_synth, "generate a synthetic stream instead");
  c_conv->add_option("--seed", conv_seed, "synthetic scene seed");
  c_conv->add_option("--sweeps", conv_sweeps, "synthetic sweep count");
  auto* o_conv_roi = c_conv->add_option("--roi-side", conv_roi, "ROI cube side, meters");
  c_conv->add_option("--out", conv_out, "output stream file")->required();

  // ---- train
  auto* c_train = app.add_subcommand("train", "train an entropy model per depth");
  std::vector<std::string> train_corpus;
  std::string train_model, train_depths = "11-16", train_out;
  int64_t train_steps = 5000;
  double train_lr = 1e-4;
  int train_batch = 16;
  uint64_t train_seed = 1;
  c_train->add_option("--corpus", train_corpus, "training stream files")->required();
  c_train->add_option("--model", train_model, "Histogram|O|OT|OTB|OTBCC|MLP1|CC")->required();
  auto* o_depths = c_train->add_option("--depths", train_depths, "octree depths, e.g. 11-16 or 12");
  auto* o_steps = c_train->add_option("--steps", train_steps, "optimizer steps");
  auto* o_lr = c_train->add_option("--lr", train_lr, "Adam learning rate");
  auto* o_batch = c_train->add_option("--batch", train_batch, "sweep pairs per step");
  auto* o_seed = c_train->add_option("--seed", train_seed, "init and sampling seed");
  c_train->add_option("--out", train_out, "output directory")->required();

  // ---- encode
  auto* c_enc = app.add_subcommand("encode", "compress a stream file into a container");
  std::string enc_in, enc_occ, enc_int, enc_out;
  int enc_depth = 0;
  c_enc->add_option("--input", enc_in, "stream file")->required();
  c_enc->add_option("--occupancy", enc_occ, "occupancy model checkpoint")->required();
  c_enc->add_option("--intensity", enc_int, "intensity model checkpoint (omit for raw bytes)");
  auto* o_enc_depth = c_enc->add_option("--depth", enc_depth, "expected octree depth (checked against the checkpoint)");
  c_enc->add_option("--out", enc_out, "output container")->required();

  // ---- decode
  auto* c_dec = app.add_subcommand("decode", "decompress a container into a stream file");
  std::string dec_in, dec_occ, dec_int, dec_out;
  c_dec->add_option("--input", dec_in, "container file")->required();
  c_dec->add_option("--occupancy", dec_occ, "occupancy model checkpoint")->required();
  c_dec->add_option("--intensity", dec_int, "intensity model checkpoint");
  c_dec->add_option("--out", dec_out, "output stream file")->required();

  // ---- eval
  auto* c_eval = app.add_subcommand("eval", "quality and bitrate of a container against its original stream");
  std::string ev_orig, ev_cont, ev_occ, ev_int, ev_out;
  double ev_tau_geo = 0.1, ev_peak = 0.0;
  int ev_tau_int = 0;
  c_eval->add_option("--original", ev_orig, "original stream file")->required();
  c_eval->add_option("--container", ev_cont, "encoded container")->required();
  c_eval->add_option("--occupancy", ev_occ, "occupancy model checkpoint")->required();
  c_eval->add_option("--intensity", ev_int, "intensity model checkpoint");
  auto* o_tau_geo = c_eval->add_option("--tau-geo", ev_tau_geo, "F1 geometry threshold, meters");
  auto* o_tau_int = c_eval->add_option("--tau-int", ev_tau_int, "F1 intensity threshold, levels");
  auto* o_peak = c_eval->add_option("--peak-r", ev_peak, "PSNR peak constant; 0 computes it from the original");
  c_eval->add_option("--out", ev_out, "CSV output path (default stdout)");

  // ---- rd-sweep
  auto* c_rd = app.add_subcommand("rd-sweep", "rate-distortion table across depths");
  std::string rd_in, rd_int, rd_out, rd_svg;
  std::vector<std::string> rd_ckpts;
  double rd_tau_geo = 0.1, rd_peak = 0.0;
  int rd_tau_int = 0;
  c_rd->add_option("--input", rd_in, "stream file")->required();
  c_rd->add_option("--occupancy", rd_ckpts, "occupancy checkpoints, one per depth")->required();
  c_rd->add_option("--intensity", rd_int, "intensity checkpoint shared across depths");
  c_rd->add_option("--tau-geo", rd_tau_geo, "F1 geometry threshold");
  c_rd->add_option("--tau-int", rd_tau_int, "F1 intensity threshold");
  c_rd->add_option("--peak-r", rd_peak, "PSNR peak constant; 0 computes it");
  c_rd->add_option("--out", rd_out, "CSV output path")->required();
  c_rd->add_option("--svg", rd_svg, "optional SVG plot path");

  // ---- ablate
  auto* c_abl = app.add_subcommand("ablate", "occupancy and intensity ablation tables on a train/test split");
  std::vector<std::string> ab_train, ab_test;
  std::string ab_depths = "12", ab_out = ".";
  int64_t ab_steps = 5000;
  double ab_lr = 1e-4;
  int ab_batch = 1;
  uint64_t ab_seed = 1;
  c_abl->add_option("--train", ab_train, "training stream files")->required();
  c_abl->add_option("--test", ab_test, "held-out stream files")->required();
  auto* o_ab_depths = c_abl->add_option("--depths", ab_depths, "depths for the table rows");
  auto* o_ab_steps = c_abl->add_option("--steps", ab_steps, "steps per variant");
  auto* o_ab_lr = c_abl->add_option("--lr", ab_lr, "learning rate");
  auto* o_ab_batch = c_abl->add_option("--batch", ab_batch, "sweep pairs per step");
  auto* o_ab_seed = c_abl->add_option("--seed", ab_seed, "shared seed for all variants");
  c_abl->add_option("--out", ab_out, "output directory");

  // ---- probe-leaf-offsets
  auto* c_probe = app.add_subcommand("probe-leaf-offsets", "raw vs deflated size of the leaf-offset stream");
  std::string pr_in, pr_out;
  int pr_depth = 12;
  c_probe->add_option("--input", pr_in, "stream file")->required();
  auto* o_pr_depth = c_probe->add_option("--depth", pr_depth, "octree depth");
  c_probe->add_option("--out", pr_out, "CSV output path (default stdout)");

  // ---- info
  auto* c_info = app.add_subcommand("info", "describe a stream, container, or checkpoint file");
  std::string info_in;
  c_info->add_option("--input", info_in, "file to inspect")->required();

  CLI11_PARSE(app, argc, argv);
  Settings cfg(config_path);

  if (*c_conv) {
    conv_roi = cfg.resolve(o_conv_roi, conv_roi, "roi-side", conv_roi);
    SweepStream s;
    if (conv_synth) {
      SceneParams p;
      p.roi_side = conv_roi;
      s = generate_synthetic_stream(conv_seed, conv_sweeps, p);
    } else {
      if (conv_kitti.empty()) throw std::invalid_argument("convert: need --kitti files or --synthetic");
      s.roi.side = conv_roi;
      for (size_t i = 0; i < conv_kitti.size(); ++i) {
        Sweep sw = load_kitti_bin(conv_kitti[i]);
        sw.timestamp = static_cast<int64_t>(i);
        s.sweeps.push_back(std::move(sw));
      }
    }
    std::vector<uint8_t> bytes = serialize_stream(s);
    write_bytes(conv_out, bytes);
    log_artifact(conv_out, bytes);
    std::printf("sweeps=%zu points=%zu roi=%.1f\n", s.sweeps.size(), stream_points(s), s.roi.side);
  }

  if (*c_train) {
    TrainSchedule sched;
    sched.steps = cfg.resolve(o_steps, train_steps, "steps", sched.steps);
    sched.lr = cfg.resolve(o_lr, train_lr, "lr", sched.lr);
    sched.batch = cfg.resolve(o_batch, train_batch, "batch", 16);
    sched.seed = cfg.resolve(o_seed, train_seed, "seed", sched.seed);
    std::string depths_str = cfg.resolve(o_depths, train_depths, "depths", train_depths);
    auto streams = load_streams(train_corpus);
    for (int d : parse_depths(depths_str)) {
      OctreeCorpus corpus = OctreeCorpus::build(streams, d, streams[0].roi);
      TrainedArtifacts a = train_one(train_model, corpus, sched);
      char stem[256];
      std::snprintf(stem, sizeof stem, "%s/%s_d%02d", train_out.c_str(), train_model.c_str(), d);
      std::vector<uint8_t> bytes = a.ckpt.serialize();
      write_bytes(std::string(stem) + ".msck", bytes);
      log_artifact(std::string(stem) + ".msck", bytes);
      write_text(std::string(stem) + "_loss.csv", loss_csv(a.loss_curve));
      write_text(std::string(stem) + "_card.txt", model_card(a, sched));
      if (!a.loss_curve.empty())
        std::printf("depth %d: %zu steps, final loss %.4f nats\n", d, a.loss_curve.size(),
                    a.loss_curve.back());
    }
  }

  if (*c_enc) {
    ModelSet ms = load_models(enc_occ, enc_int);
    if (o_enc_depth->count() && enc_depth != ms.depth())
      throw std::invalid_argument("checkpoint depth " + std::to_string(ms.depth()) +
                                  " does not match --depth " + std::to_string(enc_depth));
    SweepStream s = load_stream(enc_in);
    StreamCodec codec(ms, ms.depth(), s.roi);
    ContainerHeader h;
    h.depth = ms.depth();
    h.roi = s.roi;
    h.occupancy_kind = ms.occupancy_kind();
    h.intensity_kind = ms.intensity_kind();
    h.model_hash = ms.hash();
    h.sweep_count = static_cast<uint32_t>(s.sweeps.size());
    std::vector<Frame> frames;
    for (size_t i = 0; i < s.sweeps.size(); ++i) {
      auto t0 = std::chrono::steady_clock::now();
      frames.push_back(codec.encode_sweep(s.sweeps[i]));
      double dt = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      const Frame& f = frames.back();
      std::printf("sweep %zu: %u pts, occ %zu B, leaf %zu B, int %zu B, %.1f ms\n", i,
                  f.orig_point_count, f.occupancy.size(), f.leaf_offsets.size(), f.intensity.size(), dt);
    }
    std::vector<uint8_t> bytes = serialize_container(h, frames);
    write_bytes(enc_out, bytes);
    log_artifact(enc_out, bytes);
  }

  if (*c_dec) {
    ModelSet ms = load_models(dec_occ, dec_int);
    std::ifstream in(dec_in, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + dec_in);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    SweepStream s = decode_stream(bytes, ms);
    std::vector<uint8_t> out = serialize_stream(s);
    write_bytes(dec_out, out);
    log_artifact(dec_out, out);
    std::printf("sweeps=%zu points=%zu\n", s.sweeps.size(), stream_points(s));
  }

  if (*c_eval) {
    ModelSet ms = load_models(ev_occ, ev_int);
    SweepStream original = load_stream(ev_orig);
    std::ifstream in(ev_cont, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + ev_cont);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<FrameStats> stats;
    SweepStream decoded = decode_stream(bytes, ms, &stats);
    if (decoded.sweeps.size() != original.sweeps.size())
      throw CorruptionError("container sweep count does not match original stream");
    MetricConfig mc;
    mc.tau_geo = cfg.resolve(o_tau_geo, ev_tau_geo, "tau-geo", mc.tau_geo);
    mc.tau_int = cfg.resolve(o_tau_int, ev_tau_int, "tau-int", mc.tau_int);
    double peak = cfg.resolve(o_peak, ev_peak, "peak-r", 0.0);
    mc.peak_r = peak > 0.0 ? peak : peak_constant(original);
    std::string csv = eval_csv(eval_rows(original, decoded, stats, ms.depth(), mc));
    if (ev_out.empty())
      std::fputs(csv.c_str(), stdout);
    else
      write_text(ev_out, csv);
    BitrateReport br = bitrate(stats);
    std::printf("# peak_r=%.4f bpp_total=%.4f bpp_spatial=%.4f (raw 16-byte records: 128 bpp; "
                "96-bit position + 8-bit intensity: 104 bpp)\n",
                mc.peak_r, br.bpp_total, br.bpp_spatial);
  }

  if (*c_rd) {
    SweepStream original = load_stream(rd_in);
    MetricConfig mc;
    mc.tau_geo = rd_tau_geo;
    mc.tau_int = rd_tau_int;
    mc.peak_r = rd_peak > 0.0 ? rd_peak : peak_constant(original);
    std::vector<RdRow> rows;
    for (const std::string& ck : rd_ckpts) rows.push_back(rd_point(original, load_models(ck, rd_int), mc));
    std::sort(rows.begin(), rows.end(), [](const RdRow& a, const RdRow& b) { return a.depth < b.depth; });
    std::ostringstream os;
    os << "depth,bpp_total,bpp_spatial,f1,chamfer,psnr\n";
    for (const auto& r : rows) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.3f\n", r.depth, r.bpp_total,
                    r.bpp_spatial, r.f1, r.chamfer, r.psnr);
      os << buf;
    }
    write_text(rd_out, os.str());
    std::printf("%s", os.str().c_str());
    if (!rd_svg.empty()) write_text(rd_svg, svg_plot(rows));
  }

  if (*c_abl) {
    TrainSchedule sched;
    sched.steps = cfg.resolve(o_ab_steps, ab_steps, "steps", ab_steps);
    sched.lr = cfg.resolve(o_ab_lr, ab_lr, "lr", ab_lr);
    sched.batch = cfg.resolve(o_ab_batch, ab_batch, "batch", ab_batch);
    sched.seed = cfg.resolve(o_ab_seed, ab_seed, "seed", ab_seed);
    std::string depths_str = cfg.resolve(o_ab_depths, ab_depths, "depths", ab_depths);
    auto train_streams = load_streams(ab_train);
    auto test_streams = load_streams(ab_test);

    std::ostringstream t1, t2;
    t1 << "depth,O,OT,OTB,OTBCC\n";
    t2 << "depth,baseline,MLP1,CC\n";
    for (int d : parse_depths(depths_str)) {
      OctreeCorpus corpus = OctreeCorpus::build(train_streams, d, train_streams[0].roi);
      t1 << d;
      for (const char* v : {"O", "OT", "OTB", "OTBCC"}) {
        TrainedArtifacts a = train_one(v, corpus, sched);
        ModelSet ms;
        ms.occupancy = std::make_shared<OccupancyNet>(OccupancyNet::from_checkpoint(a.ckpt));
        double bpp = occupancy_bpp(ms, test_streams);
        t1 << "," << bpp;
        std::printf("depth %d occupancy %-5s %.4f bpp\n", d, v, bpp);
      }
      t1 << "\n";

      t2 << d << "," << baseline_intensity_bpp(test_streams, d);
      for (const char* v : {"MLP1", "CC"}) {
        TrainedArtifacts a = train_one(v, corpus, sched);
        ModelSet ms;
        ms.histogram = std::make_shared<HistogramModel>(d);
        for (const auto& st : corpus.streams)
          for (const auto& e : st) ms.histogram->add(e.tree);
        ms.intensity = std::make_shared<IntensityNet>(IntensityNet::from_checkpoint(a.ckpt));
        double bpp = intensity_bpp(ms, test_streams);
        t2 << "," << bpp;
        std::printf("depth %d intensity %-4s %.4f bpp\n", d, v, bpp);
      }
      t2 << "\n";
    }
    write_text(ab_out + "/table_occupancy.csv", t1.str());
    write_text(ab_out + "/table_intensity.csv", t2.str());
  }

  if (*c_probe) {
    int depth = cfg.resolve(o_pr_depth, pr_depth, "depth", pr_depth);
    SweepStream s = load_stream(pr_in);
    std::vector<std::vector<uint8_t>> streams;
    for (const auto& sw : s.sweeps) streams.push_back(pack_leaf_offsets(build_octree(sw, s.roi, depth)));
    auto zip = make_deflate_compressor();
    auto rows = leaf_offset_compressibility_probe(streams, *zip);
    std::ostringstream os;
    os << "sweep,raw_bytes,compressed_bytes,ratio\n";
    for (size_t i = 0; i < rows.size(); ++i) {
      double ratio = rows[i].raw_bytes
                         ? static_cast<double>(rows[i].compressed_bytes) / static_cast<double>(rows[i].raw_bytes)
                         : 0.0;
      os << i << "," << rows[i].raw_bytes << "," << rows[i].compressed_bytes << "," << ratio << "\n";
    }
    if (pr_out.empty())
      std::fputs(os.str().c_str(), stdout);
    else
      write_text(pr_out, os.str());
  }

  if (*c_info) {
    std::ifstream in(info_in, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + info_in);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4) throw FormatError("file too short");
    std::string magic(bytes.begin(), bytes.begin() + 4);
    if (magic == "MSLC") {
      SweepStream s = parse_stream(bytes);
      std::printf("stream: %zu sweeps, %zu points, roi side %.1f m centered (%.1f,%.1f,%.1f)\n",
                  s.sweeps.size(), stream_points(s), s.roi.side, s.roi.center.x(), s.roi.center.y(),
                  s.roi.center.z());
    } else if (magic == "MSC1") {
      ParsedContainer c = parse_container(bytes);
      std::printf("container: depth %d, models %s/%s, hash %016llx, %u sweeps\n", c.header.depth,
                  c.header.occupancy_kind.c_str(), c.header.intensity_kind.c_str(),
                  static_cast<unsigned long long>(c.header.model_hash), c.header.sweep_count);
      for (size_t i = 0; i < c.frames.size(); ++i) {
        const Frame& f = c.frames[i];
        std::printf("  frame %zu: %u pts, %u symbols, %u leaves, occ %zu B, leaf %zu B, int %zu B\n",
                    i, f.orig_point_count, f.n_occ_symbols, f.n_leaves, f.occupancy.size(),
                    f.leaf_offsets.size(), f.intensity.size());
      }
    } else if (magic == "MSCK") {
      nn::Checkpoint ck = nn::Checkpoint::parse(bytes);
      size_t n = 0;
      for (const auto& [name, m] : ck.tensors) n += static_cast<size_t>(m.size());
      std::printf("checkpoint: %s, depth %d, seed %llu, step %lld, corpus %016llx, %zu tensors "
                  "(%zu values), hash %016llx\n",
                  ck.model_kind.c_str(), ck.depth, static_cast<unsigned long long>(ck.seed),
                  static_cast<long long>(ck.step), static_cast<unsigned long long>(ck.corpus_hash),
                  ck.tensors.size(), n, static_cast<unsigned long long>(ck.hash()));
    } else {
      throw FormatError("unrecognized magic '" + magic + "'");
    }
  }

  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CorruptionError& e) {
    std::fprintf(stderr, "data corruption: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 2;
  } catch (const nn::TrainingError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
