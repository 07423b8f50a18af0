#include "woc/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "woc/dataset.hpp"
#include "woc/errors.hpp"
#include "woc/parallel.hpp"
#include "woc/random.hpp"
#include "woc/unimodality.hpp"

namespace woc {

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::Analyze: return "analyze";
    case Command::Sweep: return "sweep";
    case Command::Unimodality: return "unimodality";
    case Command::Simulate: return "simulate";
    case Command::All: return "all";
  }
  return "all";
}

std::optional<Command> parse_command(std::string_view text) noexcept {
  for (auto c : {Command::Analyze, Command::Sweep, Command::Unimodality, Command::Simulate,
                 Command::All}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kDefaultOutputDir = "woc-out";
constexpr std::uint64_t kDipSeedSalt = 0x6469702d6e756c6cULL;

// Files land in a sibling staging directory and are renamed into place only
// by commit(); an abandoned stage is deleted.
class StagedOutput {
 public:
  explicit StagedOutput(fs::path final_dir) : final_(fs::absolute(final_dir).lexically_normal()) {
    if (!final_.has_filename()) final_ = final_.parent_path();
    static std::atomic<unsigned> counter{0};
    stage_ = final_.parent_path() /
             ("." + final_.filename().string() + ".staging-" + std::to_string(::getpid()) +
              "-" + std::to_string(counter++));
    std::error_code ec;
    fs::remove_all(stage_, ec);
    fs::create_directories(stage_, ec);
    if (ec) throw IoError(stage_.string(), "cannot create staging directory: " + ec.message());
  }

  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  ~StagedOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(stage_, ec);
    }
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = stage_ / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError(path.string(), "write failed");
    names_.push_back(name);
  }

  RunOutcome commit() {
    std::error_code ec;
    fs::create_directories(final_, ec);
    if (ec) throw IoError(final_.string(), "cannot create output directory: " + ec.message());
    for (const auto& name : names_) {
      fs::rename(stage_ / name, final_ / name, ec);
      if (ec) throw IoError((final_ / name).string(), "cannot move output: " + ec.message());
    }
    fs::remove_all(stage_, ec);
    committed_ = true;
    RunOutcome outcome{final_.string(), names_};
    std::sort(outcome.files.begin(), outcome.files.end());
    return outcome;
  }

 private:
  fs::path final_;
  fs::path stage_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

template <typename Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

ojson maybe(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson maybe(const std::optional<double>& v) { return v ? maybe(*v) : ojson(nullptr); }

std::string resolve_output_dir(const RunConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return kDefaultOutputDir;
}

struct ExclusionRow {
  std::string record_id;
  std::string reason;
  std::vector<std::string> excluded_from;
};

ojson config_json(const RunConfig& c) {
  ojson j;
  j["min_prior"] = c.min_prior;
  j["alpha_grid"] = c.alpha_grid;
  j["B"] = c.bootstrap_replicates;
  j["M"] = c.dip_replicates;
  j["n_min"] = c.n_min;
  j["error_mode"] = to_string(c.error_mode);
  j["resample_mode"] = to_string(c.resample_mode);
  j["seed"] = c.seed;
  return j;
}

ojson point_json(const AlphaSweepPoint& p, bool with_samples) {
  ojson j;
  j["alpha"] = p.alpha;
  j["mean_improvement"] = maybe(p.mean_improvement);
  j["ci_low"] = maybe(p.ci_low);
  j["ci_high"] = maybe(p.ci_high);
  j["n_records"] = p.n_records;
  j["n_rounds"] = p.n_rounds;
  j["empty_rounds"] = p.empty_rounds;
  j["flag"] = to_string(p.flag);
  if (with_samples) j["bootstrap_samples"] = p.bootstrap_samples;
  return j;
}

ojson test_json(const ProportionTestResult& t) {
  ojson j;
  j["k"] = to_string(t.k);
  j["n_improved"] = t.n_improved;
  j["n_worsened"] = t.n_worsened;
  j["n_unchanged"] = t.n_unchanged;
  j["p_hat"] = t.p_hat;
  j["z"] = t.z;
  j["p_value"] = t.p_value;
  j["significant"] = t.p_value <= kUnimodalityLevel;
  return j;
}

}  // namespace

void validate(const RunConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
  if (c.min_prior < 1) bad("min_prior must be >= 1");
  if (c.bootstrap_replicates < 1) bad("B must be >= 1");
  if (c.dip_replicates < kMinDipReplicates) {
    bad("M must be >= " + std::to_string(kMinDipReplicates));
  }
  if (c.n_min < 1) bad("n_min must be >= 1");
  for (double a : c.alpha_grid) {
    if (!(a >= -1.0 && a <= 1.0)) {
      throw Error(ErrorCode::AlphaOutOfRange, "alpha grid value outside [-1, 1]");
    }
  }

  const bool has_files = !c.records_path.empty() || !c.truths_path.empty();
  if (has_files) {
    if (c.records_path.empty()) bad("a truths file was given without a records file");
    if (c.truths_path.empty()) bad("a records file was given without a truths file");
    for (const auto& path : {c.records_path, c.truths_path}) {
      std::ifstream probe(path);
      if (!probe) throw IoError(path, "input file is missing or unreadable");
    }
  } else if (c.scenarios.empty()) {
    bad(c.command == Command::Simulate
            ? "simulate needs a scenario config"
            : "no input: give --records and --truths, or a scenario config");
  }
  if (c.command == Command::Simulate && c.scenarios.empty()) bad("simulate needs a scenario config");
  if (!c.dip_cache_path.empty() && fs::is_directory(c.dip_cache_path)) {
    throw IoError(c.dip_cache_path, "dip cache path is a directory");
  }
}

RunOutcome run(const RunConfig& config) {
  validate(config);
  StagedOutput out(resolve_output_dir(config));

  const bool simulate_only = config.command == Command::Simulate;
  const bool use_files = !config.records_path.empty() && !simulate_only;

  // Simulated data is analyzed in its emitted CSV form, so re-running on the
  // written files reproduces the same report.
  Dataset data;
  if (use_files) {
    data = load_dataset(config.records_path, config.truths_path);
  } else {
    const auto sim = generate_composite(config.scenarios);
    std::ostringstream records, truths;
    serialize_dataset(sim.dataset, records, truths);
    out.write("records.csv", records.str());
    out.write("truths.csv", truths.str());
    out.write("true_sw.csv", to_text([&](std::ostream& o) { write_true_sw_csv(o, sim); }));
    std::istringstream records_in(records.str()), truths_in(truths.str());
    data = parse_dataset(records_in, truths_in);
    data.meta = sim.dataset.meta;
  }

  ojson report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = to_string(config.command);
  {
    ojson prov;
    prov["tool"] = "woc";
    prov["source"] = use_files ? "files" : "simulated";
    prov["records"] = config.records_path;
    prov["truths"] = config.truths_path;
    prov["config_file"] = config.config_path;
    prov["meta"] = data.meta;
    report["provenance"] = prov;
  }
  report["config"] = config_json(config);
  report["counts"] = nullptr;

  ojson counts;
  counts["rounds"] = data.rounds.size();
  counts["records"] = data.record_count();

  if (simulate_only) {
    ojson scen = ojson::array();
    for (const auto& s : config.scenarios) {
      scen.push_back({{"name", s.name}, {"seed", s.seed}, {"n_rounds", s.n_rounds},
                      {"n_agents", s.n_agents}});
    }
    report["counts"] = counts;
    report["scenarios"] = scen;
    out.write("report.json", report.dump(2) + "\n");
    return out.commit();
  }

  const bool do_sign = config.command == Command::Analyze || config.command == Command::All;
  const bool do_sweep = config.command == Command::Sweep || config.command == Command::All;
  const bool do_uni = config.command == Command::Unimodality || config.command == Command::All;

  const auto results = classify_records(data, config.min_prior, config.error_mode);

  std::size_t insufficient = 0, undefined = 0, out_of_range = 0, defined = 0;
  for (const auto& r : results) {
    if (r.excluded == woc::Exclusion::InsufficientPrior) ++insufficient;
    if (r.excluded == woc::Exclusion::UndefinedSw) ++undefined;
    if (r.sw) {
      ++defined;
      if (std::fabs(*r.sw) > 1.0) ++out_of_range;
    }
  }
  counts["insufficient_prior"] = insufficient;
  counts["sw_defined"] = defined;
  counts["undefined_sw"] = undefined;
  counts["sw_out_of_range"] = out_of_range;

  if (do_sign || do_sweep) {
    out.write("sw_results.csv",
              to_text([&](std::ostream& o) { write_sw_results_csv(o, results); }));
  }

  if (do_sign) {
    const auto summary = sw_sign_summary(results);
    ojson table;
    std::ostringstream summary_csv;
    summary_csv << "direction,improved,worsened,unchanged\n";
    for (auto d : {Direction::TowardCrowd, Direction::AwayFromCrowd, Direction::NoChange}) {
      const auto imp = summary.at(d, SignSummary::Improved);
      const auto wor = summary.at(d, SignSummary::Worsened);
      const auto unc = summary.at(d, SignSummary::Unchanged);
      table[std::string(to_string(d))] = {{"improved", imp}, {"worsened", wor}, {"unchanged", unc}};
      summary_csv << to_string(d) << ',' << imp << ',' << wor << ',' << unc << '\n';
    }
    report["sign_summary"] = table;
    out.write("sign_summary.csv", summary_csv.str());
  }

  if (do_sweep) {
    BootstrapOptions opts;
    opts.replicates = config.bootstrap_replicates;
    opts.seed = config.seed;
    opts.resample = config.resample_mode;
    opts.error_mode = config.error_mode;
    opts.threads = config.threads;
    const auto points = sweep_alpha(data, results, config.alpha_grid, opts);

    ojson summary = ojson::array();
    ojson full = ojson::array();
    for (const auto& p : points) {
      summary.push_back(point_json(p, false));
      full.push_back(point_json(p, true));
    }
    report["sweep"] = summary;
    ojson sweep_doc;
    sweep_doc["schema_version"] = kReportSchemaVersion;
    sweep_doc["B"] = config.bootstrap_replicates;
    sweep_doc["resample_mode"] = to_string(config.resample_mode);
    sweep_doc["points"] = full;
    out.write("sweep.json", sweep_doc.dump(2) + "\n");
    out.write("sweep_points.csv", to_text([&](std::ostream& o) { write_sweep_csv(o, points); }));
  }

  DipFlags flags;
  if (do_uni) {
    struct Job {
      std::string record_id;
      std::vector<double> sample;
      bool has_crowd = false;
    };
    std::vector<Job> jobs;
    std::vector<std::size_t> sizes;
    for (const auto& round : data.rounds) {
      for (std::size_t i = 0; i < round.records.size(); ++i) {
        Job job{round.records[i].record_id, {}, false};
        if (auto crowd = shown_crowd_for(round, i, config.min_prior)) {
          job.sample = std::move(crowd->sample);
          job.has_crowd = true;
          if (job.sample.size() >= config.n_min) sizes.push_back(job.sample.size());
        }
        jobs.push_back(std::move(job));
      }
    }

    const std::uint64_t dip_seed = splitmix64(config.seed ^ kDipSeedSalt);
    DipNullCache cache(config.dip_replicates, dip_seed, config.threads);
    if (!config.dip_cache_path.empty() && fs::exists(config.dip_cache_path)) {
      std::ifstream in(config.dip_cache_path);
      cache.load(in);
    }
    const auto cached_before = cache.size();
    cache.prepare(sizes);
    if (!config.dip_cache_path.empty() && cache.size() != cached_before) {
      std::ofstream cache_out(config.dip_cache_path);
      cache.save(cache_out);
    }

    std::vector<DipResult> dips(jobs.size());
    parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
      if (jobs[j].has_crowd) dips[j] = flag_unimodality(jobs[j].sample, config.n_min, cache);
    });

    std::ostringstream dip_csv;
    dip_csv << "record_id,n,dip,p_value,flag\n";
    std::size_t n_uni = 0, n_non = 0, n_ind = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& d = dips[j];
      switch (d.flag) {
        case Modality::Unimodal: ++n_uni; break;
        case Modality::NonUnimodal: ++n_non; break;
        case Modality::Indeterminate: ++n_ind; break;
      }
      dip_csv << jobs[j].record_id << ',' << d.n << ',';
      if (jobs[j].has_crowd) dip_csv << nlohmann::json(d.dip).dump();
      dip_csv << ',';
      if (d.p_value) dip_csv << nlohmann::json(*d.p_value).dump();
      dip_csv << ',' << to_string(d.flag) << '\n';
      flags.emplace(jobs[j].record_id, d);
    }
    out.write("dip_flags.csv", dip_csv.str());
    counts["dip_unimodal"] = n_uni;
    counts["dip_non_unimodal"] = n_non;
    counts["dip_indeterminate"] = n_ind;

    const auto entries = user_subset_improvements(data, flags, config.error_mode);
    out.write("user_improvements.csv",
              to_text([&](std::ostream& o) { write_user_improvements_csv(o, entries); }));

    ojson uni;
    ojson tests = ojson::object();
    std::vector<ProportionTestResult> test_rows;
    for (auto k : {ModalityClass::Uni, ModalityClass::NonUni}) {
      try {
        const auto t = proportion_test(entries, k);
        tests[std::string(to_string(k))] = test_json(t);
        test_rows.push_back(t);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoDecisiveEntries) throw;
        tests[std::string(to_string(k))] = nullptr;
      }
    }
    uni["entries"] = entries.size();
    uni["proportion_tests"] = tests;

    const auto per_round = per_round_proportions(entries);
    ojson rounds = ojson::array();
    for (const auto& r : per_round) {
      ojson row;
      row["round_id"] = r.round_id;
      row["k"] = to_string(r.k);
      row["n_improved"] = r.n_improved;
      row["n_worsened"] = r.n_worsened;
      row["n_unchanged"] = r.n_unchanged;
      row["p_value"] = r.test ? ojson(r.test->p_value) : ojson(nullptr);
      rounds.push_back(row);
    }
    uni["per_round"] = rounds;

    const std::vector<ImprovementCurve> curves{
        sorted_improvement_curve(entries, ModalityClass::Uni),
        sorted_improvement_curve(entries, ModalityClass::NonUni)};
    ojson curve_means;
    for (const auto& c : curves) {
      curve_means[std::string(to_string(c.k))] = {{"n", c.values.size()}, {"mean", maybe(c.mean)}};
    }
    uni["curve_means"] = curve_means;
    report["unimodality"] = uni;

    out.write("proportions.csv",
              to_text([&](std::ostream& o) { write_proportions_csv(o, test_rows); }));
    out.write("round_proportions.csv",
              to_text([&](std::ostream& o) { write_round_proportions_csv(o, per_round); }));
    out.write("sorted_curves.csv",
              to_text([&](std::ostream& o) { write_curves_csv(o, curves); }));
  }

  // Each excluded record appears once, under its first applicable reason.
  std::vector<ExclusionRow> exclusions;
  {
    std::size_t idx = 0;
    for (const auto& round : data.rounds) {
      for (const auto& rec : round.records) {
        const auto& r = results[idx++];
        ExclusionRow ex{rec.record_id, {}, {}};
        const bool no_crowd = r.excluded == woc::Exclusion::InsufficientPrior;
        const bool undefined_sw = r.excluded == woc::Exclusion::UndefinedSw;
        const bool indeterminate =
            do_uni && !no_crowd && flags.at(rec.record_id).flag == Modality::Indeterminate;
        if (no_crowd) {
          ex.reason = "insufficient_prior";
        } else if (undefined_sw && (do_sign || do_sweep)) {
          ex.reason = "undefined_sw";
        } else if (indeterminate) {
          ex.reason = "dip_indeterminate";
        } else {
          continue;
        }
        if ((no_crowd || undefined_sw) && do_sign) ex.excluded_from.push_back("sign_summary");
        if ((no_crowd || undefined_sw) && do_sweep) ex.excluded_from.push_back("sweep");
        if ((no_crowd || indeterminate) && do_uni) ex.excluded_from.push_back("unimodality");
        exclusions.push_back(std::move(ex));
      }
    }
  }
  ojson excl = ojson::array();
  for (const auto& e : exclusions) {
    excl.push_back({{"record_id", e.record_id}, {"reason", e.reason},
                    {"excluded_from", e.excluded_from}});
  }
  counts["excluded_records"] = exclusions.size();
  report["counts"] = counts;
  report["exclusions"] = excl;

  out.write("report.json", report.dump(2) + "\n");
  return out.commit();
}

}  // namespace woc
