#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "p300/complexity.hpp"
#include "p300/error.hpp"
#include "p300/eval.hpp"
#include "p300/io.hpp"
#include "p300/nn/architecture.hpp"
#include "p300/signal.hpp"
#include "p300/synth.hpp"
#include "p300/train.hpp"

namespace p300::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::string out;
  std::string format = "text";
  bool dry_run = false;
  std::uint64_t seed = 42;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());

  std::string arch = "sepconv1d";
  std::string arch_file;
  std::size_t channels = 6;
  std::size_t samples = 206;
  std::vector<std::size_t> filters{4};
  bool bn_running_stats = false;

  std::size_t epochs = 200;
  std::size_t patience = 50;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::string val;
  std::string history;

  std::size_t repetitions = 10;
  std::size_t folds = 5;
  bool timing = false;

  std::size_t subjects = 22;
  std::size_t trials = 2880;
  double rate = 256.0;
  double ratio = 1.0 / 6.0;
  double amplitude = 1.0;
  double noise = 1.0;
  double latency = 300.0;
  double width = 80.0;

  double low = 0.1;
  double high = 12.0;
  int order = 4;
  bool no_detrend = false;
};

std::string single_line(std::string_view text) {
  std::string line(text);
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::replace(line.begin(), line.end(), '\r', ' ');
  return line;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::string join(const std::vector<std::size_t>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) text += (i ? "," : "") + std::to_string(values[i]);
  return text;
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

// Replaces `--config FILE` with the file's `key=value` lines as `--key=value`
// arguments, placed after the subcommand. Keys given explicitly win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open config file '" + path + "'");
  auto given = [&](const std::string& key) {
    return std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    require(eq != std::string_view::npos && eq > 0, ErrorCode::parse,
            "config line " + std::to_string(number) + ": expected key=value");
    const std::string key(trim(text.substr(0, eq)));
    const std::string value(trim(text.substr(eq + 1)));
    if (key == "command" || given(key)) continue;
    if (value == "true") {
      extra.push_back("--" + key);
    } else if (value != "false") {
      extra.push_back("--" + key + "=" + value);
    }
  }
  std::size_t at = 1;
  while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
  at = std::min(at + 1, args.size());
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
  return args;
}

void print_config(std::ostream& out, const RunConfig& c) {
  out << "command=" << c.command << '\n';
  for (const std::string& in : c.inputs) out << "in=" << in << '\n';
  out << "out=" << c.out << "\nformat=" << c.format << "\nseed=" << c.seed << "\njobs=" << c.jobs
      << "\narch=" << c.arch << "\narch-file=" << c.arch_file << "\nchannels=" << c.channels
      << "\nsamples=" << c.samples << "\nfilters=" << join(c.filters)
      << "\nbn-running-stats=" << std::boolalpha << c.bn_running_stats << "\nepochs=" << c.epochs
      << "\npatience=" << c.patience << "\nbatch=" << c.batch << "\nlr=" << c.lr
      << "\nval=" << c.val << "\nhistory=" << c.history << "\nrepetitions=" << c.repetitions
      << "\nfolds=" << c.folds << "\ntiming=" << c.timing << "\nsubjects=" << c.subjects
      << "\ntrials=" << c.trials << "\nrate=" << c.rate << "\nratio=" << c.ratio
      << "\namplitude=" << c.amplitude << "\nnoise=" << c.noise << "\nlatency=" << c.latency
      << "\nwidth=" << c.width << "\nlow=" << c.low << "\nhigh=" << c.high << "\norder=" << c.order
      << "\nno-detrend=" << c.no_detrend << '\n';
}

void check_inputs_exist(const std::vector<std::string>& inputs) {
  require(!inputs.empty(), ErrorCode::invalid_argument, "no input files given (--in)");
  for (const std::string& path : inputs)
    require(fs::is_regular_file(path), ErrorCode::io, "input file '" + path + "' does not exist");
}

void check_format(const std::string& format) {
  require(format == "text" || format == "csv" || format == "json", ErrorCode::invalid_argument,
          "--format must be text, csv or json");
}

train::TrainConfig train_config(const RunConfig& c) {
  train::TrainConfig config;
  config.max_epochs = c.epochs;
  config.patience = std::min(c.patience, c.epochs);
  config.batch_size = c.batch;
  config.learning_rate = c.lr;
  config.seed = c.seed;
  config.validate();
  return config;
}

nn::ArchitectureSpec architecture(const RunConfig& c, std::size_t channels, std::size_t samples,
                                  std::size_t filters) {
  if (!c.arch_file.empty()) {
    std::ifstream in(c.arch_file);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open architecture file '" + c.arch_file + "'");
    std::stringstream text;
    text << in.rdbuf();
    nn::ArchitectureSpec spec = nn::parse_architecture(text.str());
    require(spec.channels == channels && spec.samples == samples, ErrorCode::shape,
            "architecture file declares " + std::to_string(spec.channels) + "x" +
                std::to_string(spec.samples) + " input, data is " + std::to_string(channels) +
                "x" + std::to_string(samples));
    return spec;
  }
  complexity::BuiltinOptions options;
  options.sepconv_filters = filters;
  return complexity::builtin_architecture(c.arch, channels, samples, options);
}

std::vector<EpochSet> load_subjects(const std::vector<std::string>& inputs) {
  std::vector<EpochSet> subjects;
  for (const std::string& path : inputs) {
    EpochSet set = io::read_epochs(fs::path(path));
    set.subject_id = fs::path(path).stem().string();
    subjects.push_back(std::move(set));
  }
  for (const EpochSet& s : subjects)
    require(s.channels == subjects[0].channels && s.samples == subjects[0].samples, ErrorCode::shape,
            "subject " + *s.subject_id + " is " + std::to_string(s.channels) + "x" +
                std::to_string(s.samples) + ", expected " + std::to_string(subjects[0].channels) +
                "x" + std::to_string(subjects[0].samples));
  return subjects;
}

// ---- analyze ------------------------------------------------------------------

json report_json(const complexity::ComplexityReport& r, const nn::ArchitectureSpec& spec) {
  json j;
  j["architecture"] = r.architecture;
  j["input"] = nn::format_shape(r.input);
  j["bn_running_stats"] = r.bn_running_stats;
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"layer", row.layer}, {"output", nn::format_shape(row.output)},
                    {"params", row.params}, {"flops", row.flops}});
  j["layers"] = rows;
  j["total_params"] = r.total_params;
  j["total_flops"] = r.total_flops;
  j["flops_convention"] = complexity::kFlopsConvention;
  if (auto d = complexity::dataset_index(spec.channels, spec.samples)) {
    if (auto ref = complexity::reference_params(spec.name, *d)) j["reference_params"] = *ref;
    if (auto ref = complexity::reference_flops(spec.name, *d)) j["reference_flops"] = *ref;
  }
  j["warnings"] = r.warnings;
  return j;
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
  std::vector<nn::ArchitectureSpec> specs;
  if (c.arch_file.empty() && c.arch == "all") {
    complexity::BuiltinOptions options;
    options.sepconv_filters = c.filters.front();
    specs = complexity::builtin_architectures(c.channels, c.samples, options);
  } else if (!c.arch_file.empty()) {
    std::ifstream in(c.arch_file);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open architecture file '" + c.arch_file + "'");
    std::stringstream text;
    text << in.rdbuf();
    specs.push_back(nn::parse_architecture(text.str()));
  } else {
    specs.push_back(architecture(c, c.channels, c.samples, c.filters.front()));
  }

  std::vector<complexity::ComplexityReport> reports;
  for (const auto& spec : specs) reports.push_back(complexity::count_params(spec, {c.bn_running_stats}));

  if (c.format == "json") {
    json all = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) all.push_back(report_json(reports[i], specs[i]));
    out << (all.size() == 1 ? all[0] : all).dump(2) << '\n';
  } else if (c.format == "csv") {
    out << "architecture,layer,output,params,flops\n";
    for (const auto& r : reports) {
      for (const auto& row : r.rows)
        out << r.architecture << ',' << row.layer << ",\"" << nn::format_shape(row.output) << "\","
            << row.params << ',' << row.flops << '\n';
      out << r.architecture << ",total,," << r.total_params << ',' << r.total_flops << '\n';
    }
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      if (i) out << '\n';
      out << r.architecture << "  input " << nn::format_shape(r.input) << '\n';
      out << std::left << std::setw(24) << "layer" << std::setw(16) << "output" << std::right
          << std::setw(12) << "params" << std::setw(14) << "flops" << '\n';
      for (const auto& row : r.rows)
        out << std::left << std::setw(24) << row.layer << std::setw(16) << nn::format_shape(row.output)
            << std::right << std::setw(12) << row.params << std::setw(14) << row.flops << '\n';
      out << std::left << std::setw(40) << "total" << std::right << std::setw(12) << r.total_params
          << std::setw(14) << r.total_flops << '\n';
      for (const auto& w : r.warnings) out << "warning: " << w << '\n';
    }
    out << "flops convention: " << complexity::kFlopsConvention << '\n';
  }
  return 0;
}

// ---- synth / preprocess ------------------------------------------------------------

int cmd_synth(const RunConfig& c, std::ostream& out) {
  synth::SyntheticConfig config;
  config.n_subjects = c.subjects;
  config.trials_per_subject = c.trials;
  config.target_ratio = c.ratio;
  config.channels = c.channels;
  config.samples = c.samples;
  config.sample_rate_hz = c.rate;
  config.p300_latency_ms = c.latency;
  config.p300_width_ms = c.width;
  config.p300_amplitude = c.amplitude;
  config.noise_amplitude = c.noise;
  config.seed = c.seed;
  config.validate();

  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  for (std::size_t s = 0; s < config.n_subjects; ++s) {
    const EpochSet set = synth::synth_subject(config, s);
    const fs::path path = dir / (*set.subject_id + ".epo");
    io::write_epochs(path, set);
    out << path.string() << '\n';
  }
  return 0;
}

int cmd_preprocess(const RunConfig& c, std::ostream& out) {
  check_inputs_exist(c.inputs);
  require(!c.out.empty(), ErrorCode::invalid_argument, "--out directory is required");
  const fs::path dir(c.out);
  fs::create_directories(dir);
  for (const std::string& input : c.inputs) {
    EpochSet set = io::read_epochs(fs::path(input));
    const auto filter = signal::design_butterworth_bandpass(c.order, c.low, c.high, set.sample_rate_hz);
    set = signal::remove_dc(signal::apply_iir_filter(filter, set));
    if (!c.no_detrend) set = signal::detrend_linear(std::move(set));
    const fs::path path = dir / fs::path(input).filename();
    require(fs::weakly_canonical(path) != fs::weakly_canonical(input), ErrorCode::invalid_argument,
            "output '" + path.string() + "' would overwrite its input");
    io::write_epochs(path, set);
    out << path.string() << '\n';
  }
  return 0;
}

// ---- train ---------------------------------------------------------------------

int cmd_train(const RunConfig& c, std::ostream& out) {
  check_inputs_exist(c.inputs);
  if (!c.val.empty()) check_inputs_exist({c.val});
  const std::vector<EpochSet> parts = load_subjects(c.inputs);
  std::vector<const EpochSet*> pointers;
  for (const auto& p : parts) pointers.push_back(&p);
  EpochSet all = concatenate(pointers);

  EpochSet train_set;
  EpochSet val_set;
  if (!c.val.empty()) {
    train_set = std::move(all);
    val_set = io::read_epochs(fs::path(c.val));
  } else {
    Rng rng(derive_seed(c.seed, 0xF01D));
    const auto folds = eval::stratified_kfold(all.labels, 5, rng);
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 1; f < folds.size(); ++f) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
    std::sort(train_idx.begin(), train_idx.end());
    train_set = all.subset(train_idx);
    val_set = all.subset(folds[0]);
  }

  const nn::ArchitectureSpec spec = architecture(c, train_set.channels, train_set.samples, c.filters.front());
  const train::TrainConfig config = train_config(c);
  nn::Model probe(spec, 0);  // reports analysis-only architectures before any work
  (void)probe;

  const std::vector<EpochSet> others{val_set};
  auto standardized = signal::standardize_channels(train_set, others);
  auto result = train::train_model(spec, standardized.train, standardized.others[0], config);
  const std::vector<double> scores = train::predict_scores(result.model, standardized.others[0]);
  const double val_auc = eval::roc_auc(scores, standardized.others[0].labels);

  const fs::path model_path = c.out.empty() ? fs::path("model.json") : fs::path(c.out);
  fs::path history_path = c.history.empty() ? model_path : fs::path(c.history);
  if (c.history.empty()) history_path.replace_extension(".history.csv");
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());

  json model;
  model["format"] = "p300-model-v1";
  model["architecture"] = nn::to_text(spec);
  model["seed"] = c.seed;
  model["epochs_ran"] = result.history.epochs_ran();
  model["best_epoch"] = result.history.best_epoch;
  model["best_val_loss"] = result.history.best_val_loss;
  model["val_auc"] = val_auc;
  model["standardization"] = {{"mean", standardized.stats.mean}, {"std", standardized.stats.stddev}};
  model["parameters"] = result.model.state().params;
  std::ofstream model_file(model_path);
  require(static_cast<bool>(model_file), ErrorCode::io, "cannot write '" + model_path.string() + "'");
  model_file << model.dump() << '\n';
  std::ofstream history_file(history_path);
  require(static_cast<bool>(history_file), ErrorCode::io, "cannot write '" + history_path.string() + "'");
  train::write_history_csv(history_file, result.history);

  if (c.format == "json") {
    json summary{{"model", model_path.string()}, {"history", history_path.string()},
                 {"epochs_ran", result.history.epochs_ran()}, {"best_epoch", result.history.best_epoch},
                 {"best_val_loss", result.history.best_val_loss}, {"val_auc", val_auc}};
    out << summary.dump(2) << '\n';
  } else if (c.format == "csv") {
    out << "model,history,epochs_ran,best_epoch,best_val_loss,val_auc\n"
        << model_path.string() << ',' << history_path.string() << ',' << result.history.epochs_ran()
        << ',' << result.history.best_epoch << ',' << fixed(result.history.best_val_loss, 6) << ','
        << fixed(val_auc, 6) << '\n';
  } else {
    out << "model " << model_path.string() << "\nhistory " << history_path.string() << "\nepochs "
        << result.history.epochs_ran() << " (best " << result.history.best_epoch << ", val_loss "
        << fixed(result.history.best_val_loss, 6) << ")\nval_auc " << fixed(val_auc, 6) << '\n';
  }
  return 0;
}

// ---- eval ------------------------------------------------------------------------

std::string report_prefix(const std::string& out) {
  fs::path p(out);
  if (p.extension() == ".csv" || p.extension() == ".json") p.replace_extension();
  return p.string();
}

void write_report_files(const std::string& prefix, const eval::EvalReport& report, bool timing) {
  const fs::path base(prefix);
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  std::ofstream csv(prefix + ".csv");
  require(static_cast<bool>(csv), ErrorCode::io, "cannot write '" + prefix + ".csv'");
  eval::write_report_csv(csv, report, timing);
  std::ofstream js(prefix + ".json");
  require(static_cast<bool>(js), ErrorCode::io, "cannot write '" + prefix + ".json'");
  eval::write_summary_json(js, report);
}

int cmd_eval(const RunConfig& c, eval::Protocol protocol, std::ostream& out) {
  check_inputs_exist(c.inputs);
  require(!c.filters.empty(), ErrorCode::invalid_argument, "--filters needs at least one value");
  const bool sweep = c.filters.size() > 1;
  require(!sweep || (c.arch == "sepconv1d" && c.arch_file.empty()), ErrorCode::invalid_argument,
          "a --filters sweep applies only to --arch sepconv1d");
  const train::TrainConfig config = train_config(c);
  const std::vector<EpochSet> subjects = load_subjects(c.inputs);
  if (protocol == eval::Protocol::cross) (void)eval::cross_subject_splits(subjects.size());

  eval::ProtocolOptions options;
  options.repetitions = c.repetitions;
  options.folds = c.folds;
  options.seed = c.seed;
  options.jobs = c.jobs;

  struct Row {
    std::size_t filters;
    eval::Aggregate summary;
    std::size_t records;
  };
  std::vector<Row> rows;
  for (std::size_t filters : c.filters) {
    const nn::ArchitectureSpec spec = architecture(c, subjects[0].channels, subjects[0].samples, filters);
    options.architecture = spec.name;
    const auto factory = eval::network_classifier(spec, config);
    const eval::EvalReport report = protocol == eval::Protocol::within
                                        ? eval::run_within_subject(factory, subjects, options)
                                        : eval::run_cross_subject(factory, subjects, options);
    if (!c.out.empty()) {
      const std::string prefix = report_prefix(c.out);
      write_report_files(sweep ? prefix + "_f" + std::to_string(filters) : prefix, report, c.timing);
    }
    rows.push_back({filters, report.summary(), report.records.size()});
  }

  if (sweep && !c.out.empty()) {
    std::ofstream csv(report_prefix(c.out) + "_sweep.csv");
    require(static_cast<bool>(csv), ErrorCode::io, "cannot write sweep CSV");
    csv << "filters,mean_auc,std_auc\n";
    for (const Row& r : rows) csv << r.filters << ',' << fixed(r.summary.mean, 10) << ',' << fixed(r.summary.std, 10) << '\n';
  }

  if (c.format == "csv") {
    out << "filters,mean_auc,std_auc\n";
    for (const Row& r : rows) out << r.filters << ',' << fixed(r.summary.mean, 10) << ',' << fixed(r.summary.std, 10) << '\n';
  } else if (c.format == "json") {
    json all = json::array();
    for (const Row& r : rows)
      all.push_back({{"protocol", eval::to_string(protocol)}, {"architecture", options.architecture},
                     {"filters", r.filters}, {"records", r.records}, {"mean_auc", r.summary.mean},
                     {"std_auc", r.summary.std}});
    out << all.dump(2) << '\n';
  } else {
    for (const Row& r : rows)
      out << options.architecture << (c.arch == "sepconv1d" ? " filters=" + std::to_string(r.filters) : "")
          << " records=" << r.records << " auc=" << fixed(r.summary.mean, 4) << " +- "
          << fixed(r.summary.std, 4) << '\n';
  }
  return 0;
}

// ---- report ------------------------------------------------------------------------

struct ReportFile {
  std::string source;
  std::map<std::string, std::vector<double>> by_subject;
  std::vector<std::string> order;
  std::vector<double> all;
};

ReportFile read_report(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open '" + path + "'");
  ReportFile file;
  file.source = fs::path(path).stem().string();
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) &&
              trim(line) == "subject,repetition,fold,auc,epochs,train_s,infer_s",
          ErrorCode::parse, path + ": not an evaluation report (unexpected header)");
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    require(fields.size() == 7, ErrorCode::parse,
            path + ": row " + std::to_string(number) + " has " + std::to_string(fields.size()) + " fields, expected 7");
    double auc = 0.0;
    try {
      auc = std::stod(fields[3]);
    } catch (const std::exception&) {
      fail(ErrorCode::parse, path + ": row " + std::to_string(number) + ": auc is not a number");
    }
    if (!file.by_subject.count(fields[0])) file.order.push_back(fields[0]);
    file.by_subject[fields[0]].push_back(auc);
    file.all.push_back(auc);
  }
  require(!file.all.empty(), ErrorCode::parse, path + ": no records");
  return file;
}

// Filter count encoded as a trailing `_f<k>` in a sweep report's name.
std::optional<std::size_t> sweep_filters(const std::string& source) {
  const auto at = source.rfind("_f");
  if (at == std::string::npos || at + 2 >= source.size()) return std::nullopt;
  const std::string digits = source.substr(at + 2);
  if (!std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
    return std::nullopt;
  return std::stoul(digits);
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  check_inputs_exist(c.inputs);
  std::vector<ReportFile> files;
  for (const std::string& path : c.inputs) files.push_back(read_report(path));

  struct Line {
    std::string source, subject;
    std::size_t n;
    eval::Aggregate a;
  };
  std::vector<Line> lines;
  for (const auto& f : files) {
    for (const auto& s : f.order) lines.push_back({f.source, s, f.by_subject.at(s).size(), eval::aggregate(f.by_subject.at(s))});
    lines.push_back({f.source, "ALL", f.all.size(), eval::aggregate(f.all)});
  }
  const bool is_sweep = std::all_of(files.begin(), files.end(), [](const ReportFile& f) { return sweep_filters(f.source).has_value(); });

  std::ostringstream table;
  table << "source,subject,n,mean_auc,std_auc\n";
  for (const Line& l : lines)
    table << l.source << ',' << l.subject << ',' << l.n << ',' << fixed(l.a.mean, 10) << ',' << fixed(l.a.std, 10) << '\n';
  std::ostringstream sweep;
  if (is_sweep) {
    std::vector<std::pair<std::size_t, eval::Aggregate>> points;
    for (const auto& f : files) points.emplace_back(*sweep_filters(f.source), eval::aggregate(f.all));
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    sweep << "filters,mean_auc,std_auc\n";
    for (const auto& [k, a] : points) sweep << k << ',' << fixed(a.mean, 10) << ',' << fixed(a.std, 10) << '\n';
  }

  if (!c.out.empty()) {
    std::ofstream file(c.out);
    require(static_cast<bool>(file), ErrorCode::io, "cannot write '" + c.out + "'");
    file << (is_sweep ? sweep.str() : table.str());
  }
  if (c.format == "csv") {
    out << table.str();
    if (is_sweep) out << '\n' << sweep.str();
  } else if (c.format == "json") {
    json all = json::array();
    for (const Line& l : lines)
      all.push_back({{"source", l.source}, {"subject", l.subject}, {"n", l.n}, {"mean_auc", l.a.mean}, {"std_auc", l.a.std}});
    out << all.dump(2) << '\n';
  } else {
    for (const Line& l : lines)
      out << std::left << std::setw(24) << l.source << std::setw(10) << l.subject << std::right << std::setw(5) << l.n
          << "  " << fixed(l.a.mean, 4) << " +- " << fixed(l.a.std, 4) << '\n';
  }
  return 0;
}

// ---- option wiring ---------------------------------------------------------------------

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--seed", c.seed, "Random seed (falls back to P300_SEED)")->envname("P300_SEED");
  sub->add_option("--format", c.format, "Output format: text, csv or json");
  sub->add_flag("--dry-run", c.dry_run, "Print the resolved configuration and exit");
}

void add_arch(CLI::App* sub, RunConfig& c) {
  sub->add_option("--arch", c.arch, "Built-in architecture name");
  sub->add_option("--arch-file", c.arch_file, "Architecture text file (overrides --arch)");
  sub->add_option("--filters", c.filters, "SepConv1D filter count; a comma list runs a sweep")->delimiter(',');
}

void add_training(CLI::App* sub, RunConfig& c) {
  sub->add_option("--epochs", c.epochs, "Maximum training epochs");
  sub->add_option("--patience", c.patience, "Early-stopping patience in epochs");
  sub->add_option("--batch", c.batch, "Mini-batch size");
  sub->add_option("--lr", c.lr, "Adam learning rate");
}

}  // namespace

std::string error_line(std::string_view code, std::string_view message) {
  return "error: code=" + std::string(code) + " message=" + single_line(message);
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Single-trial P300 detection toolkit", "p300"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic oddball cohort as EPO1 files");
  add_common(synth, c);
  synth->add_option("--out", c.out, "Output directory");
  synth->add_option("--subjects", c.subjects, "Number of subjects");
  synth->add_option("--trials", c.trials, "Trials per subject");
  synth->add_option("--channels", c.channels, "Channels");
  synth->add_option("--samples", c.samples, "Samples per trial");
  synth->add_option("--rate", c.rate, "Sample rate in Hz");
  synth->add_option("--ratio", c.ratio, "Fraction of target trials");
  synth->add_option("--amplitude", c.amplitude, "P300 peak amplitude");
  synth->add_option("--noise", c.noise, "Background noise RMS");
  synth->add_option("--latency", c.latency, "P300 latency in ms");
  synth->add_option("--width", c.width, "P300 width (standard deviation) in ms");

  auto* pre = app.add_subcommand("preprocess", "Bandpass filter, remove DC and detrend EPO1 files");
  add_common(pre, c);
  pre->add_option("--in", c.inputs, "Input EPO1 files")->required();
  pre->add_option("--out", c.out, "Output directory")->required();
  pre->add_option("--low", c.low, "Lower band edge in Hz");
  pre->add_option("--high", c.high, "Upper band edge in Hz");
  pre->add_option("--order", c.order, "Butterworth order");
  pre->add_flag("--no-detrend", c.no_detrend, "Skip linear detrending");

  auto* tr = app.add_subcommand("train", "Train one model with early stopping");
  add_common(tr, c);
  add_arch(tr, c);
  add_training(tr, c);
  tr->add_option("--in", c.inputs, "Training EPO1 files (concatenated)")->required();
  tr->add_option("--val", c.val, "Validation EPO1 file (default: a stratified 20% split)");
  tr->add_option("--out", c.out, "Model file (default model.json)");
  tr->add_option("--history", c.history, "History CSV (default: the model path with extension .history.csv)");

  CLI::App* evals[2];
  evals[0] = app.add_subcommand("eval-within", "Repeated stratified k-fold evaluation per subject");
  evals[1] = app.add_subcommand("eval-cross", "Leave-two-subjects-out evaluation");
  for (CLI::App* sub : evals) {
    add_common(sub, c);
    add_arch(sub, c);
    add_training(sub, c);
    sub->add_option("--in", c.inputs, "One EPO1 file per subject")->required();
    sub->add_option("--out", c.out, "Report prefix: writes <out>.csv and <out>.json");
    sub->add_option("--jobs", c.jobs, "Worker threads");
    sub->add_flag("--timing", c.timing, "Fill the train_s/infer_s report columns");
  }
  evals[0]->add_option("--repetitions", c.repetitions, "Cross-validation repetitions");
  evals[0]->add_option("--folds", c.folds, "Folds per repetition");

  auto* an = app.add_subcommand("analyze", "Shapes, parameter counts and FLOPS of an architecture");
  add_common(an, c);
  add_arch(an, c);
  an->add_option("--channels", c.channels, "Input channels");
  an->add_option("--samples", c.samples, "Input samples");
  an->add_flag("--bn-running-stats", c.bn_running_stats, "Count batch-norm running statistics");

  auto* rep = app.add_subcommand("report", "Aggregate evaluation report CSVs");
  add_common(rep, c);
  rep->add_option("--in", c.inputs, "Report CSV files")->required();
  rep->add_option("--out", c.out, "Plot-ready CSV output");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
      return 0;
    }
    err << error_line("usage", e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << error_line(to_string(e.code()), e.what()) << '\n';
    return 1;
  }

  c.command = app.get_subcommands().front()->get_name();
  try {
    check_format(c.format);
    if (c.dry_run) {
      print_config(out, c);
      return 0;
    }
    if (c.command == "synth") return cmd_synth(c, out);
    if (c.command == "preprocess") return cmd_preprocess(c, out);
    if (c.command == "train") return cmd_train(c, out);
    if (c.command == "eval-within") return cmd_eval(c, eval::Protocol::within, out);
    if (c.command == "eval-cross") return cmd_eval(c, eval::Protocol::cross, out);
    if (c.command == "analyze") return cmd_analyze(c, out);
    return cmd_report(c, out);
  } catch (const Error& e) {
    err << error_line(to_string(e.code()), e.what()) << '\n';
  } catch (const fs::filesystem_error& e) {
    err << error_line("io", e.what()) << '\n';
  } catch (const std::exception& e) {
    err << error_line("internal", e.what()) << '\n';
  }
  return 1;
}

}  // namespace p300::cli
