// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/cli.hpp"

#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sentirisk/config.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {
namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string arch;
  std::string attention;
  std::string model_in;
  std::string model_out = "model.ckpt.json";
  std::string data_dir;
};

RunConfig resolve_config(const GlobalFlags& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (const auto seed = resolve_seed(g.seed)) cfg.set_seed(*seed);
  if (!g.arch.empty()) cfg.arch = *parse_arch(g.arch);
  if (!g.attention.empty()) cfg.model.attention_enabled = g.attention == "on";
  return cfg;
}

std::filesystem::path require_data_dir(const GlobalFlags& g) {
  if (g.data_dir.empty()) throw CLI::RequiredError("--data-dir");
  return g.data_dir;
}

/// Model shape follows the prepared data: vocabulary, window and doc length.
ModelConfig fit_to_data(ModelConfig model, const PreparedDataset& data) {
  model.vocab_size = data.vocab.size();
  model.window = data.window;
  model.max_doc_len = data.max_doc_len;
  return model;
}

const std::vector<WindowSample>& pick_split(const PreparedDataset& data, const std::string& split) {
  const auto& samples = split == "train" ? data.splits.train
                        : split == "val" ? data.splits.val
                                         : data.splits.test;
  if (samples.empty()) throw DataError("the " + split + " split is empty");
  return samples;
}

CnnGruModel load_model_for(const GlobalFlags& g, const PreparedDataset& data) {
  if (g.model_in.empty()) throw CLI::RequiredError("--model-in");
  CnnGruModel model = load_checkpoint(g.model_in);
  if (model.config.window != data.window || model.config.max_doc_len != data.max_doc_len ||
      model.config.vocab_size != data.vocab.size()) {
    throw DataError("checkpoint " + g.model_in + " does not match the prepared data (window " +
                    std::to_string(model.config.window) + " vs " + std::to_string(data.window) +
                    ", vocab " + std::to_string(model.config.vocab_size) + " vs " +
                    std::to_string(data.vocab.size()) + ")");
  }
  return model;
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw DataError("cannot write " + path);
  fn(file);
}

nlohmann::json report_json(const MetricsReport& r) { return nlohmann::json::parse(report_to_json(r)); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text and market sentiment forecasting with risk alerts", "sentirisk"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "flat JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for initialization and shuffling");
  app.add_option("--arch", g.arch, "model variant")->check(CLI::IsMember({"cnn", "gru", "cnn-gru"}));
  app.add_option("--attention", g.attention, "attention pooling")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--model-in", g.model_in, "checkpoint to load");
  app.add_option("--model-out", g.model_out, "checkpoint to write")->capture_default_str();
  app.add_option("--data-dir", g.data_dir, "raw data (prepare) or prepared data (other commands)");

  auto* prepare = app.add_subcommand("prepare", "ingest, clean, label, align and window raw data");
  std::string prep_out;
  std::string market_file = "market.csv";
  std::string text_file = "text.jsonl";
  std::string pos_file = "lexicon_positive.txt";
  std::string neg_file = "lexicon_negative.txt";
  prepare->add_option("--out", prep_out, "output directory (default <data-dir>/prepared)");
  prepare->add_option("--market", market_file, "market CSV, relative to --data-dir")->capture_default_str();
  prepare->add_option("--text", text_file, "text JSONL, relative to --data-dir")->capture_default_str();
  prepare->add_option("--lexicon-positive", pos_file)->capture_default_str();
  prepare->add_option("--lexicon-negative", neg_file)->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "train a model on prepared data");
  std::string history_path;
  train_cmd->add_option("--history", history_path, "write per-epoch history JSONL here");

  const std::vector<std::string> splits = {"train", "val", "test"};
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on a split");
  std::string eval_split = "test";
  std::string eval_report;
  evaluate_cmd->add_option("--split", eval_split)->check(CLI::IsMember(splits))->capture_default_str();
  evaluate_cmd->add_option("--report", eval_report, "write the metrics JSON here");

  auto* compare_cmd = app.add_subcommand("compare", "train and score CNN, GRU and CNN+GRU");
  std::string compare_split = "test";
  std::string compare_report;
  compare_cmd->add_option("--split", compare_split)->check(CLI::IsMember(splits))->capture_default_str();
  compare_cmd->add_option("--report", compare_report, "write all metrics as JSON here");

  auto* predict_cmd = app.add_subcommand("predict", "export date,true_close,pred_close CSV");
  std::string predict_split = "test";
  std::string predict_out;
  std::string predict_daily_out;
  predict_cmd->add_option("--split", predict_split)->check(CLI::IsMember(splits))->capture_default_str();
  predict_cmd->add_option("--out", predict_out, "CSV path")->required();
  predict_cmd->add_option("--daily", predict_daily_out, "also write daily class predictions JSONL");

  auto* alert_cmd = app.add_subcommand("alert", "emit alert JSONL from daily predictions");
  std::string alert_predictions;
  std::string alert_split = "test";
  std::string alert_out;
  std::optional<double> alert_threshold;
  alert_cmd->add_option("--predictions", alert_predictions,
                        "daily predictions JSONL; otherwise run --model-in on --data-dir");
  alert_cmd->add_option("--split", alert_split)->check(CLI::IsMember(splits))->capture_default_str();
  alert_cmd->add_option("--out", alert_out, "alert JSONL path (default standard output)");
  alert_cmd->add_option("--threshold", alert_threshold, "risk threshold override");

  for (auto* sub : {prepare, train_cmd, evaluate_cmd, compare_cmd, predict_cmd, alert_cmd}) {
    sub->fallthrough();
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const RunConfig cfg = resolve_config(g);

    const auto run_alert = [&](const std::vector<DailyPrediction>& daily) {
      AlertRuleConfig rules = cfg.alert;
      if (alert_threshold) rules.risk_threshold = *alert_threshold;
      try {
        rules.validate();
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
      const auto alerts = detect_inflections(daily, rules);
      with_output(alert_out, out, [&](std::ostream& os) { write_alerts_jsonl(alerts, os); });
      return 0;
    };

    if (prepare->parsed()) {
      const auto dir = require_data_dir(g);
      const auto bars = read_market_csv(dir / market_file);
      const auto docs = read_text_jsonl(dir / text_file);
      const auto lexicon = read_lexicon(dir / pos_file, dir / neg_file);
      const PreparedDataset data = prepare_dataset(bars, docs, lexicon, cfg.prepare);
      const std::filesystem::path target =
          prep_out.empty() ? dir / "prepared" : std::filesystem::path(prep_out);
      std::filesystem::create_directories(target);
      write_prepared_dataset(data, target);
      const std::size_t windows =
          data.splits.train.size() + data.splits.val.size() + data.splits.test.size();
      out << "windows " << windows << " train " << data.splits.train.size() << " val "
          << data.splits.val.size() << " test " << data.splits.test.size() << " vocab "
          << data.vocab.size() << " dropped_docs " << data.dropped_docs << '\n';
      return 0;
    }

    if (alert_cmd->parsed() && !alert_predictions.empty()) {
      return run_alert(read_daily_predictions_jsonl(std::filesystem::path(alert_predictions)));
    }

    const PreparedDataset data = read_prepared_dataset(require_data_dir(g));

    if (train_cmd->parsed()) {
      const CnnGruModel init = build_model(fit_to_data(cfg.model, data), cfg.arch);
      const TrainResult r = train(init, data.splits.train, data.splits.val, cfg.train, &err);
      save_checkpoint(r.model, g.model_out);
      if (!history_path.empty()) write_history_jsonl(r.history, std::filesystem::path(history_path));
      out << "best_epoch " << r.best_epoch << " val_loss " << r.best_val_loss << " epochs_run "
          << r.history.size() << " checkpoint " << g.model_out << '\n';
      return 0;
    }

    if (evaluate_cmd->parsed()) {
      const CnnGruModel model = load_model_for(g, data);
      const MetricsReport report = evaluate(model, pick_split(data, eval_split));
      if (!eval_report.empty()) {
        with_output(eval_report, out, [&](std::ostream& os) { os << report_to_json(report) << '\n'; });
      }
      const TableRow row{std::string(table_label(model.arch)), report.accuracy, report.macro_recall,
                         report.macro_f1};
      out << render_table(std::span<const TableRow>(&row, 1));
      return 0;
    }

    if (compare_cmd->parsed()) {
      const auto runs = compare_ablations(data.splits, fit_to_data(cfg.model, data), cfg.train, &err);
      if (!compare_report.empty()) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [arch, run] : runs) {
          j[std::string(to_string(arch))] = {
              {"train", report_json(run.train)}, {"val", report_json(run.val)}, {"test", report_json(run.test)}};
        }
        with_output(compare_report, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      }
      out << render_table(ablation_table(runs, compare_split));
      return 0;
    }

    if (predict_cmd->parsed()) {
      const CnnGruModel model = load_model_for(g, data);
      const auto& samples = pick_split(data, predict_split);
      export_predictions(model, samples, data.stats, predict_out);
      if (!predict_daily_out.empty()) {
        const auto daily = predict_daily(model, samples);
        with_output(predict_daily_out, out,
                    [&](std::ostream& os) { write_daily_predictions_jsonl(daily, os); });
      }
      out << "rows " << samples.size() << " written to " << predict_out << '\n';
      return 0;
    }

    return run_alert(predict_daily(load_model_for(g, data), pick_split(data, alert_split)));
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace sentirisk
