#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <etbench/etbench.hpp>

using namespace etbench;
using nlohmann::json;

namespace {

json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

TaskKind parse_task(const std::string &name) {
  auto t = task_from_name(name);
  if (!t) throw CLI::ValidationError("--task", "unknown task " + name);
  return *t;
}

// ---------------------------------------------------------------------------
// gen

struct SourceEvent {
  TimeInterval interval;
  std::string label;
  std::string caption;
};

struct SourceRecord {
  std::string id, source, video, domain, query, question, action, task_name;
  double duration = 0.0;
  std::vector<SourceEvent> events;
  std::vector<std::string> options;
  std::optional<char> answer;
  std::optional<FrameScoreTrack> frame_scores;
  std::optional<double> summary_ratio, highlight_ratio;
};

SourceRecord source_from_json(const json &j) {
  SourceRecord r;
  r.id = j.at("id").get<std::string>();
  r.source = j.at("source").get<std::string>();
  r.video = j.value("video", r.id);
  r.duration = j.at("duration").get<double>();
  r.domain = j.value("domain", "");
  r.query = j.value("query", "");
  r.question = j.value("question", "");
  r.action = j.value("action", "");
  r.task_name = j.value("task_name", "");
  for (const auto &e : j.value("events", json::array()))
    r.events.push_back({{e.at("start").get<double>(), e.at("end").get<double>()},
                        e.value("label", ""),
                        e.value("caption", "")});
  r.options = j.value("options", std::vector<std::string>{});
  if (j.contains("answer")) {
    const auto a = j["answer"].get<std::string>();
    if (a.size() != 1) throw FormatError("answer must be a single letter");
    r.answer = a[0];
  }
  if (j.contains("frame_scores")) {
    FrameScoreTrack t;
    t.frame_rate = j["frame_scores"].value("frame_rate", 1.0);
    t.scores = j["frame_scores"].at("annotators").get<std::vector<std::vector<double>>>();
    t.check();
    r.frame_scores = std::move(t);
  }
  if (j.contains("summary_ratio")) r.summary_ratio = j["summary_ratio"].get<double>();
  if (j.contains("highlight_ratio")) r.highlight_ratio = j["highlight_ratio"].get<double>();
  return r;
}

SampleMeta meta_of(const SourceRecord &r) {
  SampleMeta m;
  m.duration = r.duration;
  m.num_events = r.events.size();
  std::map<std::string, std::size_t> per_label;
  for (const auto &e : r.events) {
    m.event_durations.push_back(e.interval.duration());
    if (!e.label.empty()) {
      m.classes.push_back(e.label);
      m.max_segments = std::max(m.max_segments, ++per_label[e.label]);
    }
  }
  if (per_label.empty()) m.max_segments = r.events.size();
  m.summary_ratio = r.summary_ratio;
  m.highlight_ratio = r.highlight_ratio;
  return m;
}

std::string interval_option(const TimeInterval &iv) {
  return format_time(iv.start) + "s - " + format_time(iv.end) + "s";
}

const SourceEvent &first_event(const SourceRecord &r) {
  if (r.events.empty()) throw FormatError(r.id + ": no events");
  return r.events.front();
}

std::string domain_for(TaskKind task, const SourceRecord &r) {
  if (!r.domain.empty()) return r.domain;
  if (auto d = domain_phrase(task, r.source)) return *d;
  throw FormatError(r.id + ": no domain phrase for source " + r.source);
}

// Window crop for long egocentric videos; the video field carries the window
// as a media fragment.
void crop_into(Sample &s, const SourceRecord &r, double target, const TimeInterval &keep, Rng &rng,
               TimeInterval &shifted) {
  const auto w = crop_video_window(r.duration, target, rng, keep);
  shifted = shift_into_window(keep, w);
  s.duration = w.duration();
  s.video = r.video + "#t=" + format_time(w.start) + "," + format_time(w.end);
}

Sample generate(TaskKind task, const SourceRecord &r, Rng &rng) {
  Sample s;
  s.id = std::string(task_name(task)) + "_" + r.id;
  s.task = task;
  s.source = r.source;
  s.video = r.video;
  s.duration = r.duration;
  Placeholders ph;
  switch (task) {
  case TaskKind::RAR: {
    const auto &e = first_event(r);
    if (r.options.size() != 4 || !r.answer) throw FormatError(r.id + ": RAR needs 4 options");
    ph.times = {0.5 * (e.interval.start + e.interval.end)};
    ph.options = r.options;
    s.ground_truth = McqAnswer{*r.answer};
    break;
  }
  case TaskKind::ECA: {
    const auto &e = first_event(r);
    auto bounds = gen_eca_distracters(e.interval, r.duration, rng);
    bounds.push_back(e.interval);
    const auto pos = rng.below(4);
    std::swap(bounds[pos], bounds.back());
    for (const auto &b : bounds) ph.options.push_back(interval_option(b));
    ph.text["query"] = e.caption.empty() ? r.query : e.caption;
    s.ground_truth = McqAnswer{static_cast<char>('A' + pos)};
    break;
  }
  case TaskKind::RVQ: {
    const auto &e = first_event(r);
    if (r.options.size() != 4 || !r.answer) throw FormatError(r.id + ": RVQ needs 4 options");
    TimeInterval b = e.interval;
    char answer = *r.answer;
    if (rng.bernoulli(0.2)) {
      b = gen_rvq_shifted(e.interval, r.duration, rng);
      answer = 'E';
    }
    ph.times = {b.start, b.end};
    ph.options = r.options;
    ph.options.push_back("unable to answer");
    ph.text["question"] = r.question;
    s.ground_truth = McqAnswer{answer};
    break;
  }
  case TaskKind::TVG:
    ph.text["query"] = r.query;
    ph.text["domain"] = domain_for(task, r);
    s.ground_truth = SingleInterval{first_event(r).interval};
    break;
  case TaskKind::EPM: {
    TimeInterval iv;
    crop_into(s, r, 300.0, first_event(r).interval, rng, iv);
    ph.text["question"] = r.question.empty() ? r.query : r.question;
    s.ground_truth = SingleInterval{iv};
    break;
  }
  case TaskKind::TAL: {
    IntervalSet set;
    for (const auto &e : r.events)
      if (r.action.empty() || e.label == r.action) set.intervals.push_back(e.interval);
    ph.text["action"] = r.action.empty() ? first_event(r).label : r.action;
    s.ground_truth = std::move(set);
    break;
  }
  case TaskKind::EVS:
    if (!r.frame_scores) throw FormatError(r.id + ": EVS needs frame_scores");
    ph.text["domain"] = domain_for(task, r);
    s.ground_truth = IntervalSet{evs_ground_truth(*r.frame_scores)};
    break;
  case TaskKind::VHD:
    if (!r.frame_scores) throw FormatError(r.id + ": VHD needs frame_scores");
    ph.text["query"] = r.query;
    ph.text["domain"] = domain_for(task, r);
    s.ground_truth = HighlightRegions{vhd_ground_truth(*r.frame_scores)};
    break;
  case TaskKind::DVC:
  case TaskKind::SLC: {
    CaptionedSegments segs;
    for (const auto &e : r.events) segs.segments.push_back({e.interval, e.caption});
    ph.text[task == TaskKind::DVC ? "query" : "task"] =
        task == TaskKind::DVC ? r.query : r.task_name;
    s.ground_truth = std::move(segs);
    break;
  }
  case TaskKind::TEM: {
    if (r.events.size() < 2) throw FormatError(r.id + ": TEM needs a reference and a match");
    const auto &ref = r.events.front().interval;
    IntervalSet set;
    for (std::size_t i = 1; i < r.events.size(); ++i) set.intervals.push_back(r.events[i].interval);
    ph.times = {ref.start, ref.end};
    ph.text["domain"] = domain_for(task, r);
    s.ground_truth = std::move(set);
    break;
  }
  case TaskKind::GVQ: {
    if (r.options.size() != 4 || !r.answer) throw FormatError(r.id + ": GVQ needs 4 options");
    TimeInterval iv;
    crop_into(s, r, 150.0, first_event(r).interval, rng, iv);
    ph.text["question"] = r.question;
    ph.options = r.options;
    s.ground_truth = GroundedMcq{*r.answer, iv};
    break;
  }
  }
  s.ground_truth = std::visit(
      [&](auto v) -> GroundTruth {
        using T = decltype(v);
        if constexpr (std::is_same_v<T, SingleInterval>) {
          v.interval = clamp_interval(v.interval, s.duration);
        } else if constexpr (std::is_same_v<T, IntervalSet>) {
          for (auto &iv : v.intervals) iv = clamp_interval(iv, s.duration);
        } else if constexpr (std::is_same_v<T, HighlightRegions>) {
          for (auto &iv : v.regions) iv = clamp_interval(iv, s.duration);
        } else if constexpr (std::is_same_v<T, CaptionedSegments>) {
          for (auto &seg : v.segments) seg.interval = clamp_interval(seg.interval, s.duration);
        }
        return v;
      },
      s.ground_truth);
  s.instruction = render_instruction(TemplateId{TemplateFamily::Benchmark, task, 0}, ph);
  validate_sample(s);
  return s;
}

int cmd_gen(const std::string &source_path, const std::string &task_name_, const std::string &rules,
            std::uint64_t seed, const std::string &out_path) {
  const TaskKind task = parse_task(task_name_);
  std::vector<FilterRule> filters;
  if (!rules.empty()) filters = filter_rules_from_json(read_json_file(rules));
  std::ifstream in(source_path);
  if (!in) throw std::runtime_error("cannot open " + source_path);
  std::vector<Sample> kept;
  std::map<std::string, std::size_t> dropped;
  for_each_json_line(in, [&](const json &j, std::size_t lineno) {
    SourceRecord r;
    try {
      r = source_from_json(j);
    } catch (const std::exception &e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto decision = apply_filters(meta_of(r), filters);
    if (!decision.keep) {
      ++dropped[decision.reason];
      return;
    }
    Rng rng(derive_seed(seed, r.id));
    try {
      kept.push_back(generate(task, r, rng));
    } catch (const GenerationExhausted &) {
      ++dropped["generation_exhausted"];
    } catch (const WindowInfeasible &) {
      ++dropped["window_infeasible"];
    } catch (const InvariantViolation &) {
      ++dropped["invalid_sample"];
    }
  });
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_manifest(out, kept);
  std::cerr << "kept " << kept.size();
  for (const auto &[reason, n] : dropped) std::cerr << ", dropped " << n << " (" << reason << ")";
  std::cerr << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_render(const std::string &task_name_, int variant, const std::string &family,
               const std::string &ph_path, const std::string &corpus_path) {
  const TaskKind task = parse_task(task_name_);
  Placeholders ph;
  if (!ph_path.empty()) {
    const json values = read_json_file(ph_path);
    for (const auto &[k, v] : values.items()) {
      if (k == "options")
        ph.options = v.get<std::vector<std::string>>();
      else if (k == "times")
        ph.times = v.get<std::vector<double>>();
      else
        ph.text[k] = v.get<std::string>();
    }
  }
  const TemplateCorpus corpus =
      corpus_path.empty() ? TemplateCorpus::builtin() : TemplateCorpus::load(corpus_path);
  const TemplateId id{family == "tune" ? TemplateFamily::Tuning : TemplateFamily::Benchmark, task,
                      variant};
  std::cout << corpus.render_instruction(id, ph) << "\n";
  return 0;
}

int cmd_parse(const std::string &task_name_, double duration, const std::string &in_path) {
  const TaskKind task = parse_task(task_name_);
  std::ostringstream ss;
  if (in_path.empty() || in_path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("cannot open " + in_path);
    ss << in.rdbuf();
  }
  std::cout << to_json(parse_for_task(task, ss.str(), duration)).dump() << "\n";
  return 0;
}

int cmd_score(const std::string &manifest_path, const std::string &responses_path,
              const std::string &out_path, const std::string &embedder_url) {
  const auto manifest = read_manifest(manifest_path);
  std::map<std::string, ResponseRecord> responses;
  for (auto &r : read_responses(responses_path)) responses[r.sample_id] = std::move(r);
  std::unique_ptr<Embedder> embedder;
  if (embedder_url.empty())
    embedder = std::make_unique<HashEmbedder>();
  else
    embedder = std::make_unique<RemoteEmbedder>(embedder_url);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  std::size_t missing = 0;
  for (const auto &s : manifest) {
    std::optional<std::string> raw;
    auto it = responses.find(s.id);
    if (it != responses.end() && !it->second.error) raw = it->second.raw_text;
    if (!raw) ++missing;
    out << to_json(score_response(s, raw, *embedder)).dump() << "\n";
  }
  std::cerr << "scored " << manifest.size() << " samples (" << missing << " without a response)\n";
  return 0;
}

int cmd_run(const std::string &manifest_path, const std::string &endpoint_path,
            const std::string &media, const std::string &out_path) {
  const auto manifest = read_manifest(manifest_path);
  const auto cfg = endpoint_config_from_json(read_json_file(endpoint_path));
  RunOptions opts;
  if (!media.empty()) opts.media_dir = media;
  const auto sum = run_batch(manifest, cfg, out_path, opts);
  std::cout << "completed " << sum.completed << ", failed " << sum.failed << ", skipped "
            << sum.skipped << "\n";
  return 0;
}

int cmd_report(const std::string &scores_path, const std::string &manifest_path,
               const std::string &format, bool detail) {
  auto fmt = report_format_from_name(format);
  if (!fmt) throw CLI::ValidationError("--format", "expected markdown or csv");
  const auto rep = aggregate(read_scores(scores_path), read_manifest(manifest_path));
  std::cout << emit(rep, *fmt);
  if (detail) {
    std::cout << "\n" << emit_capabilities(rep, *fmt);
    std::cout << "\n" << emit_thresholds(rep, *fmt);
    std::cout << "\n" << emit_subtasks(rep, *fmt);
  }
  return 0;
}

int cmd_matchdemo(const matchcore::ToyConfig &cfg) {
  const auto trace = matchcore::toy_train(cfg);
  std::printf("step,loss,accuracy\n");
  for (const auto &s : trace.steps) std::printf("%zu,%.9f,%.6f\n", s.step, s.loss, s.accuracy);
  std::fprintf(stderr, "final accuracy %.4f\n", trace.final_accuracy);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Event-level video benchmark toolkit"};
  app.require_subcommand(1);

  std::string source, task, rules, out, manifest, responses, endpoint, media, scores, format,
      placeholders, family = "bench", corpus, in_path, embedder;
  std::uint64_t seed = 0;
  int variant = 0;
  double duration = 0.0;
  bool detail = false;
  matchcore::ToyConfig toy;

  auto *gen = app.add_subcommand("gen", "build a benchmark manifest from source annotations");
  gen->add_option("--source", source, "annotation JSON-lines file")->required();
  gen->add_option("--task", task)->required();
  gen->add_option("--rules", rules, "JSON list of filter rules");
  gen->add_option("--seed", seed);
  gen->add_option("--out", out)->required();

  auto *render = app.add_subcommand("render", "render an instruction template");
  render->add_option("--task", task)->required();
  render->add_option("--variant", variant);
  render->add_option("--family", family, "bench or tune")->check(CLI::IsMember({"bench", "tune"}));
  render->add_option("--placeholders", placeholders, "JSON object of placeholder values");
  render->add_option("--templates", corpus, "template corpus file (default: built in)");

  auto *parse = app.add_subcommand("parse", "parse one raw model response");
  parse->add_option("--task", task)->required();
  parse->add_option("--duration", duration)->required();
  parse->add_option("--in", in_path, "input file (default stdin)");

  auto *score = app.add_subcommand("score", "score responses against a manifest");
  score->add_option("--manifest", manifest)->required();
  score->add_option("--responses", responses)->required();
  score->add_option("--out", out)->required();
  score->add_option("--embedder", embedder, "embedding service URL (default: hashed bag of words)");

  auto *run = app.add_subcommand("run", "query a chat-completions endpoint for every sample");
  run->add_option("--manifest", manifest)->required();
  run->add_option("--endpoint", endpoint, "endpoint config JSON")->required();
  run->add_option("--media", media, "directory of <sample_id>/frame_*.jpg");
  run->add_option("--out", out)->required();

  auto *report = app.add_subcommand("report", "aggregate scores into tables");
  report->add_option("--scores", scores)->required();
  report->add_option("--manifest", manifest)->required();
  report->add_option("--format", format)->default_val("markdown");
  report->add_flag("--detail", detail, "also print capability, threshold and per-source tables");

  auto *demo = app.add_subcommand("matchdemo", "train alignment heads on a synthetic problem");
  demo->add_option("--T", toy.T);
  demo->add_option("--D", toy.D);
  demo->add_option("--steps", toy.steps);
  demo->add_option("--seed", toy.seed);
  demo->add_option("--lr", toy.learning_rate);
  demo->add_option("--alpha", toy.alpha);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(source, task, rules, seed, out);
    if (*render) return cmd_render(task, variant, family, placeholders, corpus);
    if (*parse) return cmd_parse(task, duration, in_path);
    if (*score) return cmd_score(manifest, responses, out, embedder);
    if (*run) return cmd_run(manifest, endpoint, media, out);
    if (*report) return cmd_report(scores, manifest, format, detail);
    if (*demo) return cmd_matchdemo(toy);
  } catch (const CLI::Error &e) {
    return app.exit(e);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
