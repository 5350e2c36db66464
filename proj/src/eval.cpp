#include "evdet/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {

std::size_t GroundTruth::count(int class_id) const {
  std::size_t n = 0;
  for (const auto& [start, objs] : windows) {
    n += std::count_if(objs.begin(), objs.end(), [&](const GtObject& o) { return o.class_id == class_id; });
  }
  return n;
}

GroundTruth ground_truth_from(const std::vector<GtAnnotation>& annotations, const SensorGeometry& g) {
  GroundTruth gt;
  for (const auto& a : annotations) {
    const BBox b = BBox::from_pixel_box(a.box, g);
    if (!is_valid(b)) throw Error("invalid ground-truth box in window " + std::to_string(a.window_start_us));
    if (a.class_id < 0) throw Error("negative class id in ground truth");
    gt.windows[a.window_start_us].push_back({b, a.class_id});
  }
  return gt;
}

GroundTruth parse_ground_truth(std::string_view text, const SensorGeometry& g) {
  validate_geometry(g);
  std::vector<GtAnnotation> rows;
  bool header = false;
  io::for_each_line(text, [&](std::string_view line, std::uint64_t no) {
    if (!header) {
      if (line != "window_start_us,x,y,w,h,class_id") {
        throw ParseError("unexpected ground-truth CSV header at line " + std::to_string(no), no);
      }
      header = true;
      return;
    }
    const auto f = io::split_csv(line);
    if (f.size() != 6) throw ParseError("expected 6 fields at line " + std::to_string(no), no);
    const auto start = io::parse_int64(f[0], no);
    if (start < 0) throw ParseError("negative window start at line " + std::to_string(no), no);
    GtAnnotation a;
    a.window_start_us = static_cast<std::uint64_t>(start);
    a.box = {io::parse_double(f[1], no), io::parse_double(f[2], no), io::parse_double(f[3], no),
             io::parse_double(f[4], no)};
    a.class_id = static_cast<int>(io::parse_int64(f[5], no));
    if (!(a.box.w > 0) || !(a.box.h > 0) || a.class_id < 0) {
      throw ParseError("invalid box or class at line " + std::to_string(no), no);
    }
    rows.push_back(a);
  });
  if (!header) throw ParseError("missing ground-truth CSV header", 0);
  return ground_truth_from(rows, g);
}

GroundTruth load_ground_truth(const std::filesystem::path& path, const SensorGeometry& g) {
  if (!std::filesystem::exists(path)) throw Error("ground-truth file '" + path.string() + "' not found");
  return parse_ground_truth(io::read_file(path), g);
}

std::size_t MatchResult::tp() const { return std::count(true_positive.begin(), true_positive.end(), true); }

MatchResult match_detections(const std::vector<Detection>& preds, const std::vector<GtObject>& gts,
                             double iou_thresh) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  MatchResult r;
  r.true_positive.assign(preds.size(), false);
  std::vector<bool> used(gts.size(), false);
  for (std::size_t i : order) {
    double best_iou = -1;
    std::size_t best = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].class_id != preds[i].class_id) continue;
      const double v = iou(preds[i].box, gts[g].box);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best < gts.size()) {
      used[best] = true;
      r.true_positive[i] = true;
    }
  }
  r.false_negatives = std::count(used.begin(), used.end(), false);
  return r;
}

ApResult average_precision(const std::vector<WindowDetections>& preds, const GroundTruth& gt, int class_id,
                           double iou_thresh) {
  std::map<std::uint64_t, std::vector<Detection>> by_window;
  for (const auto& w : preds) {
    auto& dst = by_window[w.window_start_us];
    for (const auto& d : w.detections) {
      if (d.class_id == class_id) dst.push_back(d);
    }
  }
  std::set<std::uint64_t> starts;
  for (const auto& [s, _] : by_window) starts.insert(s);
  for (const auto& [s, _] : gt.windows) starts.insert(s);

  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> all;
  ApResult r;
  const std::size_t n_gt = gt.count(class_id);
  static const std::vector<Detection> kNoDets;
  static const std::vector<GtObject> kNoGt;
  for (std::uint64_t s : starts) {
    const auto pit = by_window.find(s);
    const auto& dets = pit == by_window.end() ? kNoDets : pit->second;
    std::vector<GtObject> objs;
    if (auto git = gt.windows.find(s); git != gt.windows.end()) {
      for (const auto& o : git->second) {
        if (o.class_id == class_id) objs.push_back(o);
      }
    }
    const MatchResult m = match_detections(dets, objs, iou_thresh);
    for (std::size_t i = 0; i < dets.size(); ++i) all.push_back({dets[i].score, m.true_positive[i]});
  }
  std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  std::size_t tp = 0;
  std::vector<std::size_t> cum_tp;
  cum_tp.reserve(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    tp += all[i].tp ? 1 : 0;
    cum_tp.push_back(tp);
    if (n_gt > 0) {
      r.curve.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                         static_cast<double>(tp) / static_cast<double>(i + 1)});
    }
  }
  r.tp = tp;
  r.fp = all.size() - tp;
  r.fn = n_gt - tp;
  if (n_gt == 0) return r;

  // Recall threshold r/100 is tested in integers: tp / n_gt >= r / 100.
  double sum = 0;
  for (std::size_t level = 0; level <= 100; ++level) {
    double best = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (100 * cum_tp[i] >= level * n_gt) best = std::max(best, r.curve[i].precision);
    }
    sum += best;
  }
  r.ap = sum / 101.0;
  return r;
}

EvalResult map_metrics(const std::vector<WindowDetections>& preds, const GroundTruth& gt) {
  std::set<int> classes;
  for (const auto& w : preds)
    for (const auto& d : w.detections) classes.insert(d.class_id);
  for (const auto& [s, objs] : gt.windows)
    for (const auto& o : objs) classes.insert(o.class_id);

  EvalResult r;
  for (int c : classes) {
    ClassMetrics m;
    m.class_id = c;
    double sum = 0;
    for (std::size_t t = 0; t < kIouLadder.size(); ++t) {
      ApResult ap = average_precision(preds, gt, c, kIouLadder[t]);
      m.ap[t] = ap.ap;
      sum += ap.ap;
      if (t == 0) {
        m.tp = ap.tp;
        m.fp = ap.fp;
        m.fn = ap.fn;
      }
      m.curves[t] = std::move(ap.curve);
    }
    m.ap50 = m.ap[0];
    m.ap5095 = sum / static_cast<double>(kIouLadder.size());
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
    r.classes.push_back(std::move(m));
  }
  if (!r.classes.empty()) {
    for (const auto& m : r.classes) {
      r.map50 += m.ap50;
      r.map5095 += m.ap5095;
    }
    r.map50 /= static_cast<double>(r.classes.size());
    r.map5095 /= static_cast<double>(r.classes.size());
  }
  return r;
}

std::string write_eval_csv(const EvalResult& r) {
  std::string out = "class_id,ap50,ap5095,tp,fp,fn\n";
  for (const auto& m : r.classes) {
    out += std::to_string(m.class_id) + ',' + io::fixed(m.ap50, 6) + ',' + io::fixed(m.ap5095, 6) + ',' +
           std::to_string(m.tp) + ',' + std::to_string(m.fp) + ',' + std::to_string(m.fn) + '\n';
  }
  out += "summary," + io::fixed(r.map50, 6) + ',' + io::fixed(r.map5095, 6) + ',' + std::to_string(r.tp) + ',' +
         std::to_string(r.fp) + ',' + std::to_string(r.fn) + '\n';
  return out;
}

std::string write_pr_csv(const std::vector<PrPoint>& curve) {
  std::string out = "recall,precision\n";
  for (const auto& p : curve) out += io::fixed(p.recall, 6) + ',' + io::fixed(p.precision, 6) + '\n';
  return out;
}

}  // namespace evdet
