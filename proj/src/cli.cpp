#include "invar/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "invar/depthorder.hpp"
#include "invar/error.hpp"
#include "invar/io.hpp"
#include "invar/occflow.hpp"
#include "invar/serialize.hpp"

namespace invar::cli {

namespace fs = std::filesystem;
using ser::json;

namespace {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return kUsage;
    case ErrorCode::Io: return kInput;
    case ErrorCode::CyclicOcclusion:
    case ErrorCode::Infeasible: return kInfeasible;
    default: return kSolver;
  }
}

// Global options and the bookkeeping of one run.
struct Context {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  CLI::App* sub = nullptr;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return fs::path(out_dir) / name;
  }

  void write(const std::string& name, const std::string& text) { io::write_text(output(name), text); }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const std::string& input(const std::string& path) {
    require_io(fs::exists(path), "input not found: " + path);
    inputs.push_back(path);
    return path;
  }

  static void require_io(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::Io, msg);
  }

  // Every option of the subcommand with its effective value, in declaration
  // order; the output directory is left out so runs into different
  // directories share a manifest.
  json parameters() const {
    json p = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      const std::string name = opt->get_name(false, true);
      if (name.empty() || opt->get_single_name() == "help") continue;
      std::vector<std::string> v = opt->results();
      if (v.empty() && !opt->get_default_str().empty()) v = {opt->get_default_str()};
      p[opt->get_single_name()] = v.size() == 1 ? json(v[0]) : json(v);
    }
    return p;
  }

  void finish() {
    json ins = json::array(), outs = json::array();
    for (const std::string& in : inputs) ins.push_back({{"path", in}, {"sha256", sha256_hex(io::read_text(in))}});
    for (const std::string& out : outputs)
      outs.push_back({{"path", out}, {"sha256", sha256_hex(io::read_text(fs::path(out_dir) / out))}});
    const json m = {{"tool", "invar"},
                    {"subcommand", sub->get_name()},
                    {"seed", seed},
                    {"parameters", parameters()},
                    {"inputs", ins},
                    {"outputs", outs}};
    io::write_text(fs::path(out_dir) / "manifest.json", m.dump(2) + "\n");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_json(Context& ctx, const std::string& path) { return json::parse(io::read_text(ctx.input(path))); }

Raster read_image(Context& ctx, const std::string& path) { return io::read_image(ctx.input(path)); }

Raster crop(const Raster& img, const std::vector<int>& window) {
  if (window.empty()) return img;
  require(window.size() == 4, "--window takes x0,y0,width,height");
  const int x0 = window[0], y0 = window[1], w = window[2], h = window[3];
  require(x0 >= 0 && y0 >= 0 && w > 0 && h > 0 && x0 + w <= img.cols() && y0 + h <= img.rows(),
          "--window lies outside the image");
  return img.block(y0, x0, h, w);
}

// Subcommand bodies.  Each registers its options and returns the action.
using Action = std::function<void(Context&)>;

Action add_flow(CLI::App& app) {
  auto* s = app.add_subcommand("flow", "Occlusion-aware optical flow between two frames: flow.flo, occlusion.pgm");
  auto p = std::make_shared<FlowProblem>();
  auto files = std::make_shared<std::vector<std::string>>();
  s->add_option("frames", *files, "frame a, frame b (PGM or PNG)")->required()->expected(2);
  s->add_option("--lambda", p->lambda, "occlusion sparsity weight")->capture_default_str();
  s->add_option("--mu", p->mu, "total variation weight")->capture_default_str();
  s->add_option("--levels", p->n_levels, "pyramid levels")->capture_default_str();
  s->add_option("--warps", p->warps_per_level, "linearizations per level")->capture_default_str();
  s->add_option("--alternations", p->alternations, "e/v alternations per linearization")->capture_default_str();
  s->add_option("--inner", p->inner_iters, "primal-dual iterations per v-step")->capture_default_str();
  s->add_option("--eps-w", p->eps_w, "re-weighting floor")->capture_default_str();
  s->add_option("--tau-scale", p->tau_scale, "mask threshold in robust std")->capture_default_str();
  return [=](Context& ctx) {
    p->frame_a = read_image(ctx, (*files)[0]);
    p->frame_b = read_image(ctx, (*files)[1]);
    const FlowSolution sol = solve(*p);
    io::write_flo(ctx.output("flow.flo"), sol.v);
    io::write_mask_pgm(ctx.output("occlusion.pgm"), sol.occlusion);
    const long occluded = static_cast<long>((sol.occlusion != 0).count());
    ctx.write_json("flow.json", {{"objective", sol.objective}, {"tau_e", sol.tau_e}, {"occluded", occluded}});
    std::cout << "occluded pixels: " << occluded << "\n";
  };
}

Action add_detect(CLI::App& app) {
  auto* s = app.add_subcommand("detect", "Co-variant frames of one image: frames.json");
  struct Opts {
    std::string image, detector = "dog";
    double sigma0 = 1.6, threshold = 0.02, sigma_d = 1.0, sigma_w = 2.0, kappa = 0.04, rel = 0.01, sigma_stop = 0.1;
    int steps = 3, levels = 10, gap_min = 2;
    bool raw = false;
  };
  auto o = std::make_shared<Opts>();
  s->add_option("image", o->image)->required();
  s->add_option("--detector", o->detector, "log, dog, hessian, harris or superpixel")->capture_default_str();
  s->add_option("--sigma0", o->sigma0, "finest scale")->capture_default_str();
  s->add_option("--steps", o->steps, "scales per octave")->capture_default_str();
  s->add_option("--levels", o->levels, "scale-space levels")->capture_default_str();
  s->add_option("--threshold", o->threshold, "blob contrast threshold")->capture_default_str();
  s->add_option("--sigma-d", o->sigma_d, "harris derivative scale")->capture_default_str();
  s->add_option("--sigma-w", o->sigma_w, "harris window scale")->capture_default_str();
  s->add_option("--kappa", o->kappa, "harris kappa")->capture_default_str();
  s->add_option("--rel", o->rel, "harris threshold relative to the peak")->capture_default_str();
  s->add_option("--sigma-stop", o->sigma_stop, "superpixel merge cost limit")->capture_default_str();
  s->add_option("--gap-min", o->gap_min, "superpixel stability gap")->capture_default_str();
  s->add_flag("--raw", o->raw, "skip rotation and contrast canonization");
  return [=](Context& ctx) {
    const Raster img = read_image(ctx, o->image);
    const DetectorKind kind = detector_kind_from_string(o->detector);
    std::vector<Frame> frames;
    if (kind == DetectorKind::Harris) {
      frames = detect_harris(img, o->sigma_d, o->sigma_w, o->kappa, o->rel);
    } else if (kind == DetectorKind::SuperpixelCentroid) {
      frames = region_frames(segment_tree(img, o->sigma_stop, o->gap_min).final_labels);
    } else {
      frames = detect_blobs(build_scale_space(img, o->sigma0, o->steps, o->levels), kind, o->threshold);
    }
    std::vector<Frame> kept;
    int dropped = 0;
    for (Frame f : frames) {
      if (!o->raw) {
        try {
          f.theta = canonize_rotation(img, f);
          const Patch p = extract_patch(img, f);
          f.alpha = p.alpha;
          f.beta = p.beta;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::UndefinedOrientation && e.code() != ErrorCode::FlatPatch) throw;
          ++dropped;
          continue;
        }
      }
      kept.push_back(f);
    }
    ctx.write_json("frames.json", ser::to_json(kept));
    std::cout << kept.size() << " frames";
    if (dropped) std::cout << ", " << dropped << " dropped without orientation or contrast";
    std::cout << "\n";
  };
}

Action add_track(CLI::App& app) {
  auto* s = app.add_subcommand("track", "Tracking on the selection tree: tracks.jsonl");
  auto p = std::make_shared<TrackParams>();
  auto files = std::make_shared<std::vector<std::string>>();
  s->add_option("frames", *files, "image sequence in order")->required();
  s->add_option("--sigma0", p->sigma0, "finest detection scale")->capture_default_str();
  s->add_option("--steps", p->steps_per_octave, "scales per octave")->capture_default_str();
  s->add_option("--levels", p->n_levels, "scale-space levels")->capture_default_str();
  s->add_option("--threshold", p->contrast_thresh, "blob contrast threshold")->capture_default_str();
  s->add_option("--min-margin", p->min_margin, "stability margin in octaves")->capture_default_str();
  s->add_option("--max-residual", p->max_residual, "accepted relative SSD residual")->capture_default_str();
  return [=](Context& ctx) {
    require(files->size() >= 2, "track needs at least two frames");
    std::vector<Raster> frames;
    for (const std::string& f : *files) frames.push_back(read_image(ctx, f));
    const std::vector<Track> tracks = track_sequence(frames, *p);
    ctx.write("tracks.jsonl", ser::tracks_to_jsonl(tracks));
    long live = 0;
    for (const Track& t : tracks) live += t.status == TrackStatus::Live;
    std::cout << tracks.size() << " tracks, " << live << " live\n";
  };
}

Action add_art(CLI::App& app) {
  auto* s = app.add_subcommand("art", "Attributed Reeb tree of an image: art.json");
  auto image = std::make_shared<std::string>();
  auto sigma = std::make_shared<double>(2.0);
  s->add_option("image", *image)->required();
  s->add_option("--sigma", *sigma, "smoothing scale")->capture_default_str();
  return [=](Context& ctx) {
    const ART art = build_art(read_image(ctx, *image), *sigma);
    ctx.write_json("art.json", ser::to_json(art));
    std::cout << art.nodes.size() << " nodes\n";
  };
}

Action add_art_diff(CLI::App& app) {
  auto* s = app.add_subcommand("art-diff", "Compare two ARTs (art.json files or images): diff.json");
  auto files = std::make_shared<std::vector<std::string>>();
  auto sigma = std::make_shared<double>(2.0);
  s->add_option("inputs", *files, "two ART JSON files or two images")->required()->expected(2);
  s->add_option("--sigma", *sigma, "smoothing scale for image inputs")->capture_default_str();
  return [=](Context& ctx) {
    ART t[2];
    for (int k = 0; k < 2; ++k) {
      const std::string& path = ctx.input((*files)[k]);
      const std::string text = io::read_text(path);
      const auto first = text.find_first_not_of(" \t\r\n");
      t[k] = first != std::string::npos && text[first] == '{' ? ser::art_from_json(json::parse(text))
                                                               : build_art(io::read_image(path), *sigma);
    }
    const ArtDiff d = art_diff(t[0], t[1]);
    ctx.write_json("diff.json", ser::to_json(d));
    std::cout << (d.equal ? "equal" : "unequal") << "\n";
    if (!d.equal)
      std::cout << "maxima " << d.maxima[0] << "/" << d.maxima[1] << ", minima " << d.minima[0] << "/" << d.minima[1]
                << ", saddles " << d.saddles[0] << "/" << d.saddles[1] << ", encodings differ at " << d.first_mismatch
                << "\n";
  };
}

Action add_describe(CLI::App& app) {
  auto* s = app.add_subcommand("describe", "Descriptors of tracked regions: descriptors.json, distances.csv");
  struct Opts {
    std::vector<std::string> frames;
    std::string tracks, metric = "l2";
    int grid = 8, hog_grid = 4, bins = 8;
    PatchParams patch;
  };
  auto o = std::make_shared<Opts>();
  s->add_option("frames", o->frames, "image sequence the tracks refer to")->required();
  s->add_option("--tracks", o->tracks, "tracks.jsonl")->required();
  s->add_option("--grid", o->grid, "template grid")->capture_default_str();
  s->add_option("--hog-grid", o->hog_grid, "Time HOG grid")->capture_default_str();
  s->add_option("--bins", o->bins, "Time HOG orientation bins")->capture_default_str();
  s->add_option("--patch-size", o->patch.size, "canonized patch side")->capture_default_str();
  s->add_option("--half-width", o->patch.half_width, "patch half-width in frame sigmas")->capture_default_str();
  s->add_option("--metric", o->metric, "l2 or chi2")->capture_default_str();
  return [=](Context& ctx) {
    const DescrMetric metric = descr_metric_from_string(o->metric);
    std::vector<Raster> frames;
    for (const std::string& f : o->frames) frames.push_back(read_image(ctx, f));
    const std::vector<Track> tracks = ser::tracks_from_jsonl(io::read_text(ctx.input(o->tracks)));
    json list = json::array();
    std::vector<TimeHOG> hogs;
    for (const Track& tr : tracks) {
      std::vector<Patch> patches;
      for (const TrackSample& smp : tr.samples) {
        require(smp.t >= 0 && smp.t < static_cast<int>(frames.size()), "describe: track time outside the sequence");
        try {
          patches.push_back(extract_patch(frames[smp.t], smp.frame, o->patch));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::FlatPatch) throw;
        }
      }
      if (patches.empty()) continue;
      hogs.push_back(time_hog(patches, o->hog_grid, o->bins));
      list.push_back({{"track_id", tr.id},
                      {"samples", patches.size()},
                      {"template", ser::to_json(best_template(patches, o->grid))},
                      {"time_hog", ser::to_json(hogs.back())}});
    }
    const json meta = {{"grid", o->grid}, {"bins", o->bins}, {"patch_size", o->patch.size}, {"metric", to_string(metric)}};
    ctx.write_json("descriptors.json", {{"metadata", meta}, {"descriptors", list}});
    Eigen::MatrixXd dist(hogs.size(), hogs.size());
    for (std::size_t a = 0; a < hogs.size(); ++a)
      for (std::size_t b = 0; b < hogs.size(); ++b) dist(a, b) = descr_distance(hogs[a], hogs[b], metric);
    ctx.write("distances.csv", io::to_csv(dist));
    std::cout << hogs.size() << " descriptors\n";
  };
}

Action add_texture(CLI::App& app) {
  auto* s = app.add_subcommand("texture", "Markov neighbourhood of a texture window: texture.json");
  struct Opts {
    std::string image;
    std::vector<int> window, halfwidths{1, 2, 3, 4};
    double beta = 64.0, rel = 0.25;
    int levels = 8;
  };
  auto o = std::make_shared<Opts>();
  s->add_option("image", o->image)->required();
  s->add_option("--window", o->window, "x0,y0,width,height (default: whole image)")->delimiter(',');
  s->add_option("--beta", o->beta, "complexity trade-off")->capture_default_str();
  s->add_option("--halfwidths", o->halfwidths, "candidate square half-widths")->delimiter(',')->capture_default_str();
  s->add_option("--levels", o->levels, "quantization levels Q")->capture_default_str();
  s->add_option("--rel-thresh", o->rel, "structure threshold relative to the peak response")->capture_default_str();
  return [=](Context& ctx) {
    const Raster region = crop(read_image(ctx, o->image), o->window);
    const TextureModel m = infer_neighborhood(region, o->beta, o->halfwidths, o->levels);
    json j = ser::to_json(m);
    j["region"] = to_string(texture_or_structure(region, m.sigma, o->rel));
    ctx.write_json("texture.json", j);
    std::cout << "omega half-width " << m.halfwidth << ", " << j["region"].get<std::string>() << "\n";
  };
}

Action add_segment(CLI::App& app) {
  auto* s = app.add_subcommand("segment", "Merge-tree segmentation: labels.pgm (16-bit, 0 = unstable), regions.json");
  auto image = std::make_shared<std::string>();
  auto sigma_stop = std::make_shared<double>(0.1);
  auto gap_min = std::make_shared<int>(2);
  s->add_option("image", *image)->required();
  s->add_option("--sigma-stop", *sigma_stop, "merge cost limit")->capture_default_str();
  s->add_option("--gap-min", *gap_min, "minimum birth-death gap of a stable region")->capture_default_str();
  return [=](Context& ctx) {
    const SegTree t = segment_tree(read_image(ctx, *image), *sigma_stop, *gap_min);
    io::write_labels_pgm16(ctx.output("labels.pgm"), t.stable_labels + 1);
    io::write_labels_pgm16(ctx.output("final.pgm"), t.final_labels);
    json regions = json::array();
    for (std::size_t k = 0; k < t.stable.size(); ++k) {
      const StableRegion& r = t.stable[k];
      regions.push_back({{"label", k + 1}, {"id", r.id}, {"birth", r.birth}, {"death", r.death}, {"gap", r.gap},
                         {"pixels", r.pixels.size()}});
    }
    ctx.write_json("regions.json", {{"steps", t.n_steps}, {"stable", regions}});
    std::cout << t.stable.size() << " stable regions\n";
  };
}

Action add_depth(CLI::App& app) {
  auto* s = app.add_subcommand("depth", "Depth order of segmented regions: depth.json {region_id: depth}");
  struct Opts {
    std::string labels, constraints, image, flow;
    double alpha = 1.0, beta = 1.0, eps = 1.5;
  };
  auto o = std::make_shared<Opts>();
  s->add_option("labels", o->labels, "label PGM, regions 0..K-1")->required();
  s->add_option("constraints", o->constraints, "JSON list of [occluded, occluder]")->required();
  s->add_option("--image", o->image, "intensity image (default: constant)");
  s->add_option("--flow", o->flow, ".flo motion field (default: zero)");
  s->add_option("--alpha", o->alpha, "intensity affinity weight")->capture_default_str();
  s->add_option("--beta", o->beta, "motion affinity weight")->capture_default_str();
  s->add_option("--eps", o->eps, "neighbourhood radius")->capture_default_str();
  return [=](Context& ctx) {
    const LabelImage labels = io::read_labels_pgm(ctx.input(o->labels));
    const auto cons = ser::constraints_from_json(read_json(ctx, o->constraints));
    const Raster img = o->image.empty() ? Raster(Raster::Zero(labels.rows(), labels.cols())) : read_image(ctx, o->image);
    const VectorField flow =
        o->flow.empty() ? VectorField(labels.rows(), labels.cols()) : io::read_flo(ctx.input(o->flow));
    const RegionGraph g = build_region_graph(labels, img, flow, o->alpha, o->beta, o->eps);
    const DepthLabeling d = depth_order(g, cons);
    ctx.write_json("depth.json", ser::to_json(d));
    std::cout << "objective " << fmt(d.objective) << " (" << d.method << ")\n";
  };
}

Action add_dtw(CLI::App& app) {
  auto* s = app.add_subcommand("dtw", "Dynamic time warping of two CSV series: dtw.json");
  auto files = std::make_shared<std::vector<std::string>>();
  s->add_option("series", *files, "two CSV files, one sample per row")->required()->expected(2);
  return [=](Context& ctx) {
    const TimeSeries x = io::read_csv(ctx.input((*files)[0])), y = io::read_csv(ctx.input((*files)[1]));
    const DtwResult r = dtw(x, y);
    json path = json::array();
    for (auto [i, j] : r.path) path.push_back({i, j});
    ctx.write_json("dtw.json", {{"cost", r.cost}, {"path", path}});
    std::cout << fmt(r.cost) << "\n";
  };
}

Action add_twdc(CLI::App& app) {
  auto* s = app.add_subcommand("twdc", "Time warping under dynamic constraints: twdc.json");
  auto files = std::make_shared<std::vector<std::string>>();
  auto model = std::make_shared<std::string>();
  auto p = std::make_shared<TwdcParams>();
  s->add_option("series", *files, "two CSV output series")->required()->expected(2);
  s->add_option("--model", *model, "JSON {A, B, C, x0}")->required();
  s->add_option("--lambda", p->lambda, "smoothness of the common input")->capture_default_str();
  s->add_option("--mu", p->mu, "warp bending penalty")->capture_default_str();
  s->add_option("--ridge", p->ridge, "deconvolution ridge")->capture_default_str();
  s->add_option("--coupling", p->coupling, "input coupling weight")->capture_default_str();
  s->add_option("--max-slope", p->max_slope, "largest warp increment")->capture_default_str();
  s->add_option("--resolution", p->resolution, "warp grid subdivisions per sample")->capture_default_str();
  s->add_option("--iterations", p->iterations, "outer iterations")->capture_default_str();
  s->add_option("--max-condition", p->max_condition, "conditioning limit")->capture_default_str();
  return [=](Context& ctx) {
    const TimeSeries x = io::read_csv(ctx.input((*files)[0])), y = io::read_csv(ctx.input((*files)[1]));
    const LtiModel m = ser::model_from_json(read_json(ctx, *model));
    const TwdcResult r = twdc(x, y, m, *p);
    ctx.write_json("twdc.json", {{"cost", r.cost}, {"objective", r.objective}, {"w1", r.w1}, {"w2", r.w2}});
    ctx.write("u0.csv", io::to_csv(r.u0));
    std::cout << fmt(r.cost) << "\n";
  };
}

Action add_forest(CLI::App& app) {
  auto* s = app.add_subcommand("forest", "Grow one KL/entropy tree from samples: tree.json");
  auto samples = std::make_shared<std::string>();
  auto p = std::make_shared<GrowParams>();
  s->add_option("samples", *samples, "CSV, features then a 0/1 label per row")->required();
  s->add_option("--tau", p->tau, "KL level at which nodes switch to entropy splits")->capture_default_str();
  s->add_option("--max-depth", p->max_depth, "depth cap")->capture_default_str();
  s->add_option("--min-samples", p->min_samples, "smallest splittable node")->capture_default_str();
  s->add_option("--measure", p->kl.measure, "feature whose class histograms the KL compares")->capture_default_str();
  s->add_option("--bins", p->kl.bins, "KL histogram bins")->capture_default_str();
  s->add_flag("--symmetric", p->kl.symmetric, "symmetrized KL");
  return [=](Context& ctx) {
    const Eigen::MatrixXd m = io::read_csv(ctx.input(*samples));
    require(m.cols() >= 2, "forest: need at least one feature and a label column");
    ForestData d;
    d.x = m.leftCols(m.cols() - 1);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double c = m(i, m.cols() - 1);
      require(c == 0.0 || c == 1.0, "forest: labels must be 0 or 1");
      d.c.push_back(static_cast<int>(c));
    }
    const ForestTree t = grow(d, *p);
    json j = ser::to_json(t);
    j["accuracy"] = accuracy(t, d);
    ctx.write_json("tree.json", j);
    std::cout << t.nodes.size() << " nodes, training accuracy " << fmt(accuracy(t, d)) << "\n";
  };
}

Action add_flatland(CLI::App& app) {
  auto* s = app.add_subcommand("flatland", "Passive and active recognition error in the cartoon flatland: passive.csv, active.csv");
  s->footer(
      "Keys may come from a config file given before the subcommand, e.g.\n"
      "  invar --config exp.ini flatland\n"
      "with a [flatland] section of key = value lines named like the long flags:\n"
      "  [flatland]\n  scales = 1,4,16,64\n  noise = 0.1\n  trials = 10000");
  struct Opts {
    std::string basis = "gaussian";
    std::vector<double> centres{-1.5, -0.5, 0.5, 1.5}, pos{1, 0, 1, 0}, neg{0, 1, 0, 1};
    std::vector<double> scales{1, 2, 4, 8, 16, 32, 64}, visible, background{0.0, 1.0};
    double width = 1.0, radius = 0.3, pitch = 1.0, noise = 0.1, active_scale = 1.0;
    int sites = 8, trials = 10000, translations = 4, repeats = 4;
    BhattacharyyaParams est;
  };
  auto o = std::make_shared<Opts>();
  s->add_option("--basis", o->basis, "gaussian or box bumps")->capture_default_str();
  s->add_option("--centres", o->centres, "bump centres")->delimiter(',')->capture_default_str();
  s->add_option("--width", o->width, "bump width")->capture_default_str();
  s->add_option("--pos-mean", o->pos, "class +1 mean coefficients")->delimiter(',')->capture_default_str();
  s->add_option("--neg-mean", o->neg, "class -1 mean coefficients")->delimiter(',')->capture_default_str();
  s->add_option("--radius", o->radius, "class ball radius")->capture_default_str();
  s->add_option("--sites", o->sites, "pixels")->capture_default_str();
  s->add_option("--pitch", o->pitch, "pixel pitch eps")->capture_default_str();
  s->add_option("--noise", o->noise, "noise std")->capture_default_str();
  s->add_option("--scales", o->scales, "passive scales s")->delimiter(',')->capture_default_str();
  s->add_option("--trials", o->trials, "Monte-Carlo trials per class")->capture_default_str();
  s->add_option("--active-scale", o->active_scale, "closest scale the active observer reaches")->capture_default_str();
  s->add_option("--translations", o->translations, "sub-pixel shifts K")->capture_default_str();
  s->add_option("--repeats", o->repeats, "reads averaged per site")->capture_default_str();
  s->add_option("--visible", o->visible, "a,b: visible interval (default: no occlusion)")->delimiter(',');
  s->add_option("--background", o->background, "lo,hi of the background reads")->delimiter(',')->capture_default_str();
  s->add_option("--max-dims", o->est.max_dims, "dimensions after pooling")->capture_default_str();
  s->add_option("--queries", o->est.queries, "integrand queries per class")->capture_default_str();
  s->add_option("--bootstrap", o->est.bootstrap, "bootstrap resamples")->capture_default_str();
  return [=](Context& ctx) {
    FlatScene sc;
    require(o->basis == "gaussian" || o->basis == "box", "--basis must be gaussian or box");
    sc.basis.kind = o->basis == "box" ? BasisKind::Box : BasisKind::Gaussian;
    sc.basis.centres = o->centres;
    sc.basis.width = o->width;
    sc.pos.mean = Eigen::Map<const Eigen::VectorXd>(o->pos.data(), static_cast<Eigen::Index>(o->pos.size()));
    sc.neg.mean = Eigen::Map<const Eigen::VectorXd>(o->neg.data(), static_cast<Eigen::Index>(o->neg.size()));
    sc.pos.radius = sc.neg.radius = o->radius;
    const Sensor sensor = Sensor::uniform(o->sites, o->pitch, o->noise);
    std::optional<Occlusion> occ;
    if (!o->visible.empty()) {
      require(o->visible.size() == 2 && o->background.size() == 2, "--visible and --background take two values");
      occ = Occlusion{o->visible[0], o->visible[1], o->background[0], o->background[1]};
    }
    BhattacharyyaParams est = o->est;
    est.seed = ctx.seed;
    std::string passive = "s,R,ci_low,ci_high\n";
    for (const CurvePoint& c : passive_curve(sc, sensor, o->scales, o->trials, est, occ))
      passive += fmt(c.scale) + "," + fmt(c.error.value) + "," + fmt(c.error.ci_low) + "," + fmt(c.error.ci_high) + "\n";
    ctx.write("passive.csv", passive);
    const BhattacharyyaEstimate a =
        active_error(sc, sensor, {o->active_scale, o->translations, o->repeats}, o->trials, est, occ);
    ctx.write("active.csv", "s,R,ci_low,ci_high\n" + fmt(o->active_scale) + "," + fmt(a.value) + "," + fmt(a.ci_low) +
                                "," + fmt(a.ci_high) + "\n");
    std::cout << passive << "active: " << fmt(a.value) << "\n";
  };
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Invariant visual representations toolkit"};
  app.require_subcommand(1);
  Context ctx;
  app.add_option("-o,--out", ctx.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", ctx.seed, "master seed")->capture_default_str();
  app.set_config("--config", "", "INI file; [subcommand] sections hold long-flag keys");

  std::vector<std::pair<CLI::App*, Action>> actions;
  for (auto add : {add_flow, add_detect, add_track, add_art, add_art_diff, add_describe, add_texture, add_segment,
                   add_depth, add_dtw, add_twdc, add_forest, add_flatland}) {
    Action a = add(app);
    actions.emplace_back(app.get_subcommands({}).back(), std::move(a));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (const CLI::Option* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) ctx.input(cfg->as<std::string>());
    for (auto& [sub, action] : actions) {
      if (!sub->parsed()) continue;
      ctx.sub = sub;
      fs::create_directories(ctx.out_dir);
      action(ctx);
      ctx.finish();
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error [io]: malformed JSON input: " << e.what() << "\n";
    return kInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace invar::cli
