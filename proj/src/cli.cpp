#include "evdet/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "evdet/async_engine.hpp"
#include "evdet/dvs_sim.hpp"
#include "evdet/engine.hpp"
#include "evdet/error.hpp"
#include "evdet/eval.hpp"
#include "evdet/events.hpp"
#include "evdet/io_util.hpp"
#include "evdet/pipeline.hpp"
#include "evdet/representations.hpp"
#include "evdet/synthetic.hpp"

namespace evdet {
namespace fs = std::filesystem;
namespace {

struct GlobalOptions {
  std::string geometry = "256x144";
  double window_ms = 10.0;
  std::optional<double> stride_ms;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::uint64_t window_us() const { return to_us(window_ms, "--window-ms"); }
  std::uint64_t stride_us() const { return stride_ms ? to_us(*stride_ms, "--stride-ms") : window_us(); }
  std::uint64_t require_seed(const char* why) const {
    if (!seed) throw Error(std::string("--seed is required ") + why);
    return *seed;
  }
  fs::path require_out() const {
    if (out.empty()) throw Error("--out is required");
    return out;
  }

  static std::uint64_t to_us(double ms, const char* flag) {
    const double us = std::round(ms * 1000.0);
    if (!(us >= 1.0)) throw Error(std::string(flag) + " must be at least 0.001");
    return static_cast<std::uint64_t>(us);
  }
};

/// Files produced by one subcommand. Unless commit() is reached, everything
/// written (and the output directory, if this run created it) is removed.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    } else if (!fs::is_directory(dir_)) {
      throw Error("'" + dir_.string() + "' exists and is not a directory");
    }
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = written_.rbegin(); it != written_.rend(); ++it) fs::remove(*it, ec);
    if (created_dir_) fs::remove_all(dir_, ec);
  }

  fs::path write(const fs::path& name, std::string_view bytes) {
    const fs::path p = dir_ / name;
    if (p.has_parent_path() && !fs::exists(p.parent_path())) {
      fs::create_directories(p.parent_path());
      written_.push_back(p.parent_path());
    }
    written_.push_back(p);
    io::write_file(p, bytes);
    return p;
  }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<fs::path> written_;
};

EventStream load_stream(const std::string& path, const SensorGeometry& geometry, bool sort, bool rebase) {
  if (path.empty()) throw Error("--input is required");
  const std::string bytes = io::read_file(path);
  ParseOptions opts;
  opts.geometry = geometry;
  opts.sort = sort;
  opts.rebase_epoch = rebase;
  return parse_stream(bytes, detect_format(bytes), opts);
}

std::vector<EventWindow> windows_of(const EventStream& s, const GlobalOptions& g, double span_ms) {
  std::optional<std::uint64_t> span;
  if (span_ms > 0) span = GlobalOptions::to_us(span_ms, "--duration-ms");
  return slice_windows(s, g.window_us(), g.stride_us(), span);
}

std::string window_name(std::size_t i, const char* ext) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "window_%06zu.%s", i, ext);
  return buf;
}

// ---- network construction shared by infer / flops / bench -----------------

struct NetOptions {
  std::string net = "vgg16-yolo";
  std::string weights;
  std::string save_weights;
  int base_width = 16;
  int classes = 1;
  bool random_bias = false;
};

void add_net_options(CLI::App* cmd, NetOptions& o) {
  cmd->add_option("--net", o.net, "Preset name (vgg16-yolo, vgg16-yolo-ext) or network JSON path");
  cmd->add_option("--weights", o.weights, "WGT1 weights file (otherwise random weights from --seed)");
  cmd->add_option("--save-weights", o.save_weights, "Write the weights in use to this WGT1 file");
  cmd->add_option("--base-width", o.base_width, "Preset channel base width")->check(CLI::PositiveNumber);
  cmd->add_option("--classes", o.classes, "Number of detection classes")->check(CLI::PositiveNumber);
  cmd->add_flag("--random-bias", o.random_bias, "Draw random conv biases instead of zeros");
}

const std::vector<std::pair<double, double>> kDefaultAnchors{{0.05, 0.15}, {0.1, 0.3}, {0.2, 0.5}};

NetworkSpec build_spec(const NetOptions& o, int channels, const SensorGeometry& g) {
  if (o.net == "vgg16-yolo" || o.net == "vgg16-yolo-ext") {
    PresetOptions p;
    p.in_channels = channels;
    p.height = static_cast<int>(g.height);
    p.width = static_cast<int>(g.width);
    p.base_width = o.base_width;
    p.head_outputs = static_cast<int>(kDefaultAnchors.size()) * (5 + o.classes);
    return make_preset(o.net, p);
  }
  if (!fs::exists(o.net)) throw Error("unknown network preset or missing spec file '" + o.net + "'");
  return parse_network_json(io::read_file(o.net));
}

std::shared_ptr<const Network> build_network(const NetOptions& o, int channels, const SensorGeometry& g,
                                             const GlobalOptions& glob) {
  NetworkSpec spec = build_spec(o, channels, g);
  if (!o.weights.empty()) {
    load_weights(spec, io::read_file(o.weights));
  } else {
    init_weights(spec, glob.require_seed("when no --weights file is given"), o.random_bias);
  }
  if (!o.save_weights.empty()) io::write_file(o.save_weights, write_weights(spec));
  return std::make_shared<const Network>(std::move(spec));
}

// ---- subcommands -----------------------------------------------------------

struct GenOptions {
  int rects = 2;
  double duration_ms = 500;
  double min_w = 6, max_w = 14, min_h = 14, max_h = 30;
  double min_speed = 100, max_speed = 400;
  double contrast = 0.2;
};

void cmd_gen(const GlobalOptions& g, const GenOptions& o, std::ostream& out) {
  SceneConfig cfg;
  cfg.geometry = parse_geometry(g.geometry);
  cfg.rect_count = o.rects;
  cfg.duration_us = GlobalOptions::to_us(o.duration_ms, "--duration-ms");
  cfg.window_us = g.window_us();
  cfg.min_width = o.min_w;
  cfg.max_width = o.max_w;
  cfg.min_height = o.min_h;
  cfg.max_height = o.max_h;
  cfg.min_speed = o.min_speed;
  cfg.max_speed = o.max_speed;
  cfg.dvs.contrast_threshold = o.contrast;
  cfg.seed = g.require_seed("for gen");

  const SyntheticScene scene = gen_synthetic_scene(cfg);
  OutputSet outputs(g.require_out());
  outputs.write("events.evs", write_stream(scene.stream, StreamFormat::binary_evs));
  outputs.write("gt.csv", write_ground_truth_csv(scene.ground_truth));
  outputs.commit();
  out << "wrote " << scene.stream.events.size() << " events and " << scene.ground_truth.size() << " boxes to "
      << g.out << "\n";
}

struct SimulateOptions {
  std::string frames;
  double contrast = 0.2;
  double eps = 1e-3;
};

void cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out) {
  if (o.frames.empty()) throw Error("--frames is required");
  const fs::path dir = o.frames;
  const fs::path index = dir / "timestamps.csv";
  if (!fs::exists(index)) throw Error("'" + index.string() + "' not found");
  std::vector<std::pair<std::uint64_t, std::string>> entries;
  bool header = false;
  io::for_each_line(io::read_file(index), [&](std::string_view line, std::uint64_t no) {
    if (!header) {
      if (line != "t_us,file") throw ParseError("expected header 't_us,file' in timestamps.csv", no);
      header = true;
      return;
    }
    const auto f = io::split_csv(line);
    if (f.size() != 2) throw ParseError("expected 2 fields at line " + std::to_string(no), no);
    const auto t = io::parse_int64(f[0], no);
    if (t < 0) throw ParseError("negative timestamp at line " + std::to_string(no), no);
    entries.emplace_back(static_cast<std::uint64_t>(t), std::string(f[1]));
  });
  std::vector<LuminanceFrame> frames;
  for (const auto& [t, file] : entries) frames.push_back(parse_pgm(io::read_file(dir / file), t));
  const EventStream s = simulate_dvs(frames, {o.contrast, o.eps});

  OutputSet outputs(g.require_out());
  outputs.write("events.evs", write_stream(s, StreamFormat::binary_evs));
  outputs.commit();
  out << "wrote " << s.events.size() << " events from " << frames.size() << " frames\n";
}

struct StreamOptions {
  std::string input;
  bool sort = false;
  bool rebase = false;
  double duration_ms = 0;  // 0: windows up to the last event
};

void add_stream_options(CLI::App* cmd, StreamOptions& o) {
  cmd->add_option("--input", o.input, "Event stream (binary EVS1 or CSV)")->required();
  cmd->add_flag("--sort", o.sort, "Sort out-of-order CSV records instead of failing");
  cmd->add_flag("--rebase", o.rebase, "Shift timestamps so the first event is at t = 0");
  cmd->add_option("--duration-ms", o.duration_ms, "Emit windows covering [0, duration) instead of up to the last event");
}

struct RepOptions {
  std::string kind = "histogram";
  double tau_decay_us = 10'000;
  double tau_leak_us = 100'000;
  std::string norm = "none";
  bool preview = false;
};

void add_rep_options(CLI::App* cmd, RepOptions& o, const char* kind_flag) {
  cmd->add_option(kind_flag, o.kind, "histogram | polarity | decay | frequency | leaky | fused");
  cmd->add_option("--tau-decay-us", o.tau_decay_us, "Time-surface decay constant");
  cmd->add_option("--tau-leak-us", o.tau_leak_us, "Leaky-surface constant");
  cmd->add_option("--norm", o.norm, "none | maxabs | log1p");
}

RepConfig rep_config(const RepOptions& o) {
  RepConfig c;
  c.tau_decay_us = o.tau_decay_us;
  c.tau_leak_us = o.tau_leak_us;
  c.normalization = parse_normalization(o.norm);
  return c;
}

void cmd_rep(const GlobalOptions& g, const StreamOptions& so, const RepOptions& ro, std::ostream& out) {
  const RepKind kind = parse_rep_kind(ro.kind);
  const RepConfig cfg = rep_config(ro);
  const EventStream s = load_stream(so.input, parse_geometry(g.geometry), so.sort, so.rebase);
  const auto windows = windows_of(s, g, so.duration_ms);

  OutputSet outputs(g.require_out());
  std::optional<LeakyState> leaky;
  if (kind == RepKind::leaky) leaky.emplace(s.geometry);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const RepFrame r = build_representation(kind, windows[i], cfg, leaky ? &*leaky : nullptr);
    outputs.write(window_name(i, "repf"), write_repf(r));
    if (ro.preview) outputs.write(window_name(i, r.channels == 3 ? "ppm" : "pgm"), write_preview(r));
  }
  outputs.commit();
  out << "wrote " << windows.size() << " " << rep_kind_name(kind) << " frames\n";
}

struct InferOptions {
  std::string mode = "dense";
  double conf = 0.5;
  double nms_iou = 0.5;
  float sparse_threshold = 0.0f;
};

void cmd_infer(const GlobalOptions& g, const StreamOptions& so, const RepOptions& ro, const NetOptions& no,
               const InferOptions& io_, std::ostream& out) {
  const EventStream s = load_stream(so.input, parse_geometry(g.geometry), so.sort, so.rebase);
  PipelineConfig cfg;
  cfg.rep = parse_rep_kind(ro.kind);
  cfg.rep_cfg = rep_config(ro);
  cfg.mode = parse_exec_mode(io_.mode);
  cfg.conf_threshold = io_.conf;
  cfg.nms_iou = io_.nms_iou;
  cfg.sparse_threshold = io_.sparse_threshold;
  auto net = build_network(no, static_cast<int>(rep_channels(cfg.rep)), s.geometry, g);
  cfg.head = head_for(*net, kDefaultAnchors, no.classes);

  Pipeline pipeline(net, cfg);
  std::vector<WindowDetections> dets;
  std::vector<FlopReport> reports;
  for (const auto& w : windows_of(s, g, so.duration_ms)) {
    PipelineResult r = pipeline.run(w);
    dets.push_back({w.start_us, std::move(r.detections)});
    reports.push_back(std::move(r.flops));
  }
  const FlopReport total = flop_summary(reports);

  OutputSet outputs(g.require_out());
  outputs.write("detections.csv", write_detections_csv(dets));
  outputs.write("flops.csv", write_flop_csv(total));
  outputs.commit();
  std::size_t n = 0;
  for (const auto& d : dets) n += d.detections.size();
  out << "mode=" << exec_mode_name(cfg.mode) << " windows=" << dets.size() << " detections=" << n
      << " executed_flops=" << total.executed_total() << " dense_flops=" << total.dense_total() << "\n";
}

struct EvalOptions {
  std::string dets;
  std::string gt;
};

void cmd_eval(const GlobalOptions& g, const EvalOptions& o, std::ostream& out) {
  const SensorGeometry geom = parse_geometry(g.geometry);
  const GroundTruth gt = load_ground_truth(o.gt, geom);
  if (!fs::exists(o.dets)) throw Error("detections file '" + o.dets + "' not found");
  const auto preds = parse_detections_csv(io::read_file(o.dets));
  const EvalResult r = map_metrics(preds, gt);

  OutputSet outputs(g.require_out());
  outputs.write("eval.csv", write_eval_csv(r));
  for (const auto& m : r.classes) {
    for (std::size_t t = 0; t < kIouLadder.size(); ++t) {
      outputs.write(fs::path("pr") / ("class" + std::to_string(m.class_id) + "_iou" + io::fixed(kIouLadder[t], 2) + ".csv"),
                    write_pr_csv(m.curves[t]));
    }
  }
  outputs.commit();
  out << "mAP@0.5=" << io::fixed(r.map50, 6) << " mAP@.5:.95=" << io::fixed(r.map5095, 6) << "\n";
}

struct FlopsOptions {
  std::string input_size;
  int channels = 2;
  std::string input;
  std::string mode = "sparse";
};

void cmd_flops(const GlobalOptions& g, const FlopsOptions& fo, const NetOptions& no, const RepOptions& ro,
               std::ostream& out) {
  const SensorGeometry geom = parse_geometry(fo.input_size.empty() ? g.geometry : fo.input_size);
  int channels = fo.channels;
  if (!fo.input.empty()) channels = static_cast<int>(rep_channels(parse_rep_kind(ro.kind)));
  NetworkSpec spec = build_spec(no, channels, geom);
  FlopReport report = analytic_flops(spec);

  if (!fo.input.empty()) {
    const ExecMode mode = parse_exec_mode(fo.mode);
    GlobalOptions weights_glob = g;
    if (!weights_glob.seed && no.weights.empty()) weights_glob.seed = 0;  // cost does not depend on weight values
    auto net = build_network(no, channels, geom, weights_glob);
    PipelineConfig cfg;
    cfg.rep = parse_rep_kind(ro.kind);
    cfg.rep_cfg = rep_config(ro);
    cfg.mode = mode;
    cfg.head = head_for(*net, kDefaultAnchors, no.classes);
    Pipeline pipeline(net, cfg);
    std::vector<FlopReport> reports;
    const EventStream s = load_stream(fo.input, geom, false, false);
    for (const auto& w : slice_windows(s, g.window_us(), g.stride_us())) reports.push_back(pipeline.run(w).flops);
    if (!reports.empty()) report = flop_summary(reports);
  }

  const std::string csv = write_flop_csv(report);
  out << csv;
  out << "conv_dense_flops=" << report.conv_dense() << " conv_executed_flops=" << report.conv_executed()
      << " conv_ratio=" << io::fixed(report.conv_ratio(), 6) << "\n";
  if (!g.out.empty()) {
    OutputSet outputs(g.out);
    outputs.write("flops.csv", csv);
    outputs.commit();
  }
}

struct BenchOptions {
  std::size_t max_windows = 5;
};

void cmd_bench(const GlobalOptions& g, const StreamOptions& so, const NetOptions& no, const BenchOptions& bo,
               std::ostream& out) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  std::string csv = "stage,events_or_windows,seconds,rate\n";
  auto row = [&](const std::string& stage, std::size_t n, double s) {
    csv += stage + ',' + std::to_string(n) + ',' + io::fixed(s, 6) + ',' + io::fixed(s > 0 ? n / s : 0.0, 1) + '\n';
  };

  const std::string bytes = io::read_file(so.input);
  ParseOptions popts;
  popts.geometry = parse_geometry(g.geometry);
  popts.sort = so.sort;
  popts.rebase_epoch = so.rebase;
  auto t0 = clock::now();
  const EventStream s = parse_stream(bytes, detect_format(bytes), popts);
  row("parse", s.events.size(), seconds(t0));

  t0 = clock::now();
  const auto windows = windows_of(s, g, so.duration_ms);
  row("slice", s.events.size(), seconds(t0));

  const RepConfig rcfg;
  for (RepKind k : {RepKind::histogram, RepKind::last_polarity, RepKind::decay, RepKind::frequency, RepKind::leaky,
                    RepKind::fused}) {
    LeakyState leaky(s.geometry);
    t0 = clock::now();
    for (const auto& w : windows) build_representation(k, w, rcfg, &leaky);
    row("rep:" + std::string(rep_kind_name(k)), windows.size(), seconds(t0));
  }

  const std::size_t n = std::min(bo.max_windows, windows.size());
  auto net = build_network(no, 2, s.geometry, g);
  for (ExecMode m : {ExecMode::dense, ExecMode::sparse, ExecMode::async}) {
    PipelineConfig cfg;
    cfg.mode = m;
    cfg.head = head_for(*net, kDefaultAnchors, no.classes);
    Pipeline p(net, cfg);
    t0 = clock::now();
    for (std::size_t i = 0; i < n; ++i) p.run(windows[i]);
    row("forward:" + std::string(exec_mode_name(m)), n, seconds(t0));
  }

  out << csv;
  if (!g.out.empty()) {
    OutputSet outputs(g.out);
    outputs.write("bench.csv", csv);
    outputs.commit();
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"evdet: event-camera representations, sparse/async CNN inference, FLOP accounting and mAP"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--geometry", g.geometry, "Sensor geometry WxH (default 256x144)");
  app.add_option("--window-ms", g.window_ms, "Window duration in ms");
  app.add_option("--stride-ms", g.stride_ms, "Window stride in ms (default: window duration)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic labelled event scene");
  gen_cmd->add_option("--rects", gen.rects, "Number of moving rectangles")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--duration-ms", gen.duration_ms, "Scene duration");
  gen_cmd->add_option("--min-width", gen.min_w);
  gen_cmd->add_option("--max-width", gen.max_w);
  gen_cmd->add_option("--min-height", gen.min_h);
  gen_cmd->add_option("--max-height", gen.max_h);
  gen_cmd->add_option("--min-speed", gen.min_speed, "px/s");
  gen_cmd->add_option("--max-speed", gen.max_speed, "px/s");
  gen_cmd->add_option("--contrast", gen.contrast, "DVS contrast threshold");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Convert PGM frames to events");
  sim_cmd->add_option("--frames", sim.frames, "Directory with PGM frames and timestamps.csv (t_us,file)")->required();
  sim_cmd->add_option("--contrast", sim.contrast, "Contrast threshold (log units)");
  sim_cmd->add_option("--eps", sim.eps, "Luminance floor added before the log");

  StreamOptions rep_stream;
  RepOptions rep;
  auto* rep_cmd = app.add_subcommand("rep", "Build per-window representations (REPF)");
  add_stream_options(rep_cmd, rep_stream);
  add_rep_options(rep_cmd, rep, "--kind");
  rep_cmd->add_flag("--preview", rep.preview, "Also write PGM/PPM previews");

  StreamOptions infer_stream;
  RepOptions infer_rep;
  NetOptions infer_net;
  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "Run the detector over every window");
  add_stream_options(infer_cmd, infer_stream);
  add_rep_options(infer_cmd, infer_rep, "--rep");
  add_net_options(infer_cmd, infer_net);
  infer_cmd->add_option("--mode", infer.mode, "dense | sparse | async");
  infer_cmd->add_option("--conf", infer.conf, "Score threshold");
  infer_cmd->add_option("--nms-iou", infer.nms_iou, "NMS IoU threshold");
  infer_cmd->add_option("--sparse-threshold", infer.sparse_threshold, "Active-site threshold in sparse mode");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compute mAP@0.5 and mAP@.5:.95");
  eval_cmd->add_option("--dets", ev.dets, "Detections CSV")->required();
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth CSV")->required();

  FlopsOptions fl;
  NetOptions flops_net;
  RepOptions flops_rep;
  auto* flops_cmd = app.add_subcommand("flops", "Analytic and measured FLOP counts");
  add_net_options(flops_cmd, flops_net);
  add_rep_options(flops_cmd, flops_rep, "--rep");
  flops_cmd->add_option("--input-size", fl.input_size, "Network input WxH (default: --geometry)");
  flops_cmd->add_option("--channels", fl.channels, "Network input channels")->check(CLI::PositiveNumber);
  flops_cmd->add_option("--input", fl.input, "Event stream to measure executed FLOPs on");
  flops_cmd->add_option("--mode", fl.mode, "sparse | async | dense (with --input)");

  StreamOptions bench_stream;
  NetOptions bench_net;
  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Throughput of each pipeline stage");
  add_stream_options(bench_cmd, bench_stream);
  add_net_options(bench_cmd, bench_net);
  bench_cmd->add_option("--max-windows", bench.max_windows, "Windows per forward-mode measurement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "evdet: error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_cmd) cmd_gen(g, gen, out);
    else if (*sim_cmd) cmd_simulate(g, sim, out);
    else if (*rep_cmd) cmd_rep(g, rep_stream, rep, out);
    else if (*infer_cmd) cmd_infer(g, infer_stream, infer_rep, infer_net, infer, out);
    else if (*eval_cmd) cmd_eval(g, ev, out);
    else if (*flops_cmd) cmd_flops(g, fl, flops_net, flops_rep, out);
    else if (*bench_cmd) cmd_bench(g, bench_stream, bench_net, bench, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "evdet: error: " << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace evdet
