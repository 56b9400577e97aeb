#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <thread>

#include <json.hpp>

#include "p300/error.hpp"
#include "p300/eval.hpp"
#include "p300/signal.hpp"

namespace p300::eval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class NetworkClassifier : public Classifier {
 public:
  NetworkClassifier(nn::ArchitectureSpec spec, train::TrainConfig config)
      : spec_(std::move(spec)), config_(config) {}

  void fit(const EpochSet& train_set, const EpochSet& validation, std::uint64_t seed) override {
    train::TrainConfig config = config_;
    config.seed = seed;
    auto result = train::train_model(spec_, train_set, validation, config);
    epochs_ = result.history.epochs_ran();
    model_.emplace(std::move(result.model));
  }

  std::vector<double> score(const EpochSet& set) override {
    require(model_.has_value(), ErrorCode::invalid_argument, "classifier scored before fit");
    return train::predict_scores(*model_, set);
  }

  std::size_t epochs_ran() const override { return epochs_; }

 private:
  nn::ArchitectureSpec spec_;
  train::TrainConfig config_;
  std::optional<nn::Model> model_;
  std::size_t epochs_ = 0;
};

struct Unit {
  std::size_t subject;
  std::size_t repetition;
  std::size_t fold;
};

// Fits on `train_set`, early-stops on `validation`, scores `test`.
EvalRecord run_unit(const ClassifierFactory& factory, const Unit& unit, EpochSet train_set,
                    EpochSet validation, const EpochSet* test, std::uint64_t seed,
                    bool standardize) {
  EpochSet test_set;
  if (standardize) {
    std::vector<EpochSet> others{std::move(validation)};
    if (test) others.push_back(*test);
    auto sets = signal::standardize_channels(train_set, others);
    train_set = std::move(sets.train);
    validation = std::move(sets.others[0]);
    if (test) test_set = std::move(sets.others[1]);
  } else if (test) {
    test_set = *test;
  }
  const EpochSet& scored = test ? test_set : validation;

  EvalRecord record{unit.subject, unit.repetition, unit.fold, 0.0, 0, 0.0, 0.0};
  const auto classifier = factory();
  const auto fit_start = Clock::now();
  classifier->fit(train_set, validation, seed);
  record.train_seconds = seconds_since(fit_start);
  const auto score_start = Clock::now();
  const std::vector<double> scores = classifier->score(scored);
  record.inference_seconds = seconds_since(score_start);
  record.auc = roc_auc(scores, scored.labels);
  record.epochs = classifier->epochs_ran();
  return record;
}

std::string context(const Unit& u, Protocol protocol) {
  if (protocol == Protocol::cross) return "held-out subject " + std::to_string(u.subject);
  return "subject " + std::to_string(u.subject) + ", repetition " + std::to_string(u.repetition) +
         ", fold " + std::to_string(u.fold);
}

EvalReport run_units(const std::vector<Unit>& units, Protocol protocol,
                     std::span<const EpochSet> subjects, const ProtocolOptions& options,
                     const std::function<EvalRecord(const Unit&)>& body) {
  EvalReport report;
  report.protocol = protocol;
  report.architecture = options.architecture;
  for (std::size_t s = 0; s < subjects.size(); ++s)
    report.subjects.push_back(subjects[s].subject_id.value_or("S" + std::to_string(s + 1)));
  report.records.resize(units.size());
  parallel_for(units.size(), options.jobs, [&](std::size_t i) {
    try {
      report.records[i] = body(units[i]);
    } catch (const Error& e) {
      throw Error(e.code(), context(units[i], protocol) + ": " + e.what());
    }
  });
  return report;
}

}  // namespace

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::within ? "within" : "cross";
}

ClassifierFactory network_classifier(nn::ArchitectureSpec spec, train::TrainConfig config) {
  config.validate();
  // Building once surfaces analysis-only architectures before any work starts.
  nn::Model probe(spec, 0);
  (void)probe;
  return [spec = std::move(spec), config] {
    return std::make_unique<NetworkClassifier>(spec, config);
  };
}

std::uint64_t run_seed(std::uint64_t base, std::size_t fold, std::size_t repetition) {
  return base + static_cast<std::uint64_t>(fold) * 1000 + repetition;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  for (auto& error : errors)
    if (error) std::rethrow_exception(error);
}

EvalReport run_within_subject(const ClassifierFactory& factory, std::span<const EpochSet> subjects,
                              const ProtocolOptions& options) {
  require(!subjects.empty(), ErrorCode::invalid_argument, "no subjects given");
  require(options.repetitions >= 1, ErrorCode::invalid_argument, "repetitions must be >= 1");

  // Splits are drawn up front so they do not depend on scheduling.
  std::vector<std::vector<std::vector<std::vector<std::size_t>>>> splits(subjects.size());
  std::vector<Unit> units;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    subjects[s].validate();
    for (std::size_t r = 0; r < options.repetitions; ++r) {
      Rng rng(derive_seed(options.seed, (s << 20) + r));
      splits[s].push_back(stratified_kfold(subjects[s].labels, options.folds, rng));
      for (std::size_t f = 0; f < options.folds; ++f) units.push_back({s, r, f});
    }
  }

  return run_units(units, Protocol::within, subjects, options, [&](const Unit& u) {
    const auto& folds = splits[u.subject][u.repetition];
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 0; f < folds.size(); ++f)
      if (f != u.fold) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
    std::sort(train_idx.begin(), train_idx.end());
    const EpochSet& data = subjects[u.subject];
    return run_unit(factory, u, data.subset(train_idx), data.subset(folds[u.fold]), nullptr,
                    run_seed(options.seed, u.fold, u.repetition), options.standardize);
  });
}

std::vector<CrossSplit> cross_subject_splits(std::size_t n_subjects) {
  require(n_subjects >= 3, ErrorCode::invalid_argument,
          "cross-subject evaluation needs at least 3 subjects, got " + std::to_string(n_subjects));
  std::vector<CrossSplit> splits;
  for (std::size_t i = 0; i < n_subjects; ++i) {
    CrossSplit split{i, (i + 1) % n_subjects, {}};
    for (std::size_t j = 0; j < n_subjects; ++j)
      if (j != split.test && j != split.validation) split.train.push_back(j);
    splits.push_back(std::move(split));
  }
  return splits;
}

EvalReport run_cross_subject(const ClassifierFactory& factory, std::span<const EpochSet> subjects,
                             const ProtocolOptions& options) {
  const std::vector<CrossSplit> splits = cross_subject_splits(subjects.size());
  for (const EpochSet& s : subjects) s.validate();
  std::vector<Unit> units;
  for (std::size_t i = 0; i < splits.size(); ++i) units.push_back({i, 0, i});

  return run_units(units, Protocol::cross, subjects, options, [&](const Unit& u) {
    const CrossSplit& split = splits[u.subject];
    std::vector<const EpochSet*> parts;
    for (std::size_t j : split.train) parts.push_back(&subjects[j]);
    return run_unit(factory, u, concatenate(parts), subjects[split.validation], &subjects[split.test],
                    run_seed(options.seed, u.fold, 0), options.standardize);
  });
}

void write_report_csv(std::ostream& out, const EvalReport& report, bool timing) {
  out << "subject,repetition,fold,auc,epochs,train_s,infer_s\n";
  char buf[64];
  for (const EvalRecord& r : report.records) {
    const std::string& subject = report.subjects.at(r.subject);
    std::snprintf(buf, sizeof(buf), "%.10f", r.auc);
    out << subject << ',' << r.repetition << ',' << r.fold << ',' << buf << ',' << r.epochs << ',';
    if (timing) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", r.train_seconds, r.inference_seconds);
      out << buf << '\n';
    } else {
      out << "NA,NA\n";
    }
  }
}

void write_summary_json(std::ostream& out, const EvalReport& report) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(report.protocol);
  j["architecture"] = report.architecture;
  j["records"] = report.records.size();
  const Aggregate all = report.summary();
  j["mean_auc"] = all.mean;
  j["std_auc"] = all.std;
  nlohmann::ordered_json per_subject = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < report.subjects.size(); ++s) {
    std::vector<double> aucs;
    for (const EvalRecord& r : report.records)
      if (r.subject == s) aucs.push_back(r.auc);
    if (aucs.empty()) continue;
    const Aggregate a = aggregate(aucs);
    per_subject.push_back({{"subject", report.subjects[s]}, {"mean_auc", a.mean}, {"std_auc", a.std}});
  }
  j["subjects"] = per_subject;
  out << j.dump(2) << '\n';
}

}  // namespace p300::eval
