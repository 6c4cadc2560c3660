// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sentirisk/alert.hpp"
#include "sentirisk/cli.hpp"
#include "sentirisk/config.hpp"
#include "sentirisk/errors.hpp"

namespace py = pybind11;
using namespace sentirisk;

namespace {

const std::vector<WindowSample>& split_of(const PreparedDataset& data, const std::string& split) {
  if (split == "train") return data.splits.train;
  if (split == "val") return data.splits.val;
  if (split == "test") return data.splits.test;
  throw std::invalid_argument("split must be train, val or test, got '" + split + "'");
}

RunConfig config_from(const std::optional<std::string>& path, std::optional<std::uint64_t> seed) {
  RunConfig cfg = path ? load_run_config(*path) : RunConfig{};
  if (seed) cfg.set_seed(*seed);
  return cfg;
}

py::dict report_dict(const MetricsReport& r) {
  py::list confusion;
  for (std::size_t t = 0; t < r.confusion.classes(); ++t) {
    py::list row;
    for (std::size_t p = 0; p < r.confusion.classes(); ++p) row.append(r.confusion.at(t, p));
    confusion.append(row);
  }
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["macro_precision"] = r.macro_precision;
  d["macro_recall"] = r.macro_recall;
  d["macro_f1"] = r.macro_f1;
  d["regression_mse"] = r.regression_mse;
  d["samples"] = r.samples;
  d["confusion"] = confusion;
  return d;
}

py::dict alert_dict(const Alert& a) {
  py::dict d;
  d["date"] = format_date(a.date);
  d["kind"] = std::string(to_string(a.kind));
  d["confidence"] = a.confidence;
  d["predicted_class"] = std::string(to_string(a.predicted_class));
  d["predicted_return"] = a.predicted_return;
  d["risk_score"] = a.risk_score;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CNN-GRU sentiment engine";

  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", data_error.ptr());
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  m.def("clean_text", [](const std::string& s) { return clean_text(s); }, py::arg("text"));
  m.def(
      "label_sentiment",
      [](const std::string& cleaned, const std::vector<std::string>& positive, const std::vector<std::string>& negative) {
        Lexicon lex;
        lex.positive.insert(positive.begin(), positive.end());
        lex.negative.insert(negative.begin(), negative.end());
        return std::string(to_string(label_sentiment(cleaned, lex)));
      },
      py::arg("cleaned"), py::arg("positive"), py::arg("negative"));
  m.def(
      "risk_score", [](const std::array<double, 3>& probs, double ret) { return risk_score(probs, ret); },
      py::arg("probs"), py::arg("predicted_return"));
  m.def(
      "metrics",
      [](const std::vector<std::size_t>& labels, const std::vector<std::size_t>& preds, std::size_t classes) {
        if (labels.size() != preds.size()) throw std::invalid_argument("labels and preds differ in length");
        return report_dict(metrics_from_confusion(confusion_matrix(labels, preds, classes)));
      },
      py::arg("labels"), py::arg("preds"), py::arg("classes") = 3);
  m.def(
      "render_table",
      [](const std::vector<std::tuple<std::string, double, double, double>>& rows) {
        std::vector<TableRow> table;
        for (const auto& [name, ac, rec, f1] : rows) table.push_back({name, ac, rec, f1});
        return render_table(table);
      },
      py::arg("rows"));
  m.def(
      "detect_alerts",
      [](const std::string& predictions, double threshold) {
        py::list out;
        for (const Alert& a : detect_inflections(read_daily_predictions_jsonl(std::filesystem::path(predictions)),
                                                 AlertRuleConfig{threshold})) {
          out.append(alert_dict(a));
        }
        return out;
      },
      py::arg("predictions"), py::arg("risk_threshold") = 0.7);
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
  m.def(
      "prepare",
      [](const std::string& data_dir, const std::string& out_dir, std::optional<std::string> config) {
        const RunConfig cfg = config_from(config, std::nullopt);
        const std::filesystem::path dir(data_dir);
        const PreparedDataset data =
            prepare_dataset(read_market_csv(dir / "market.csv"), read_text_jsonl(dir / "text.jsonl"),
                            read_lexicon(dir / "lexicon_positive.txt", dir / "lexicon_negative.txt"), cfg.prepare);
        write_prepared_dataset(data, out_dir);
        py::dict d;
        d["train"] = data.splits.train.size();
        d["val"] = data.splits.val.size();
        d["test"] = data.splits.test.size();
        d["vocab"] = data.vocab.size();
        d["dropped_docs"] = data.dropped_docs;
        return d;
      },
      py::arg("data_dir"), py::arg("out_dir"), py::arg("config") = py::none());

  py::class_<CnnGruModel>(m, "Model")
      .def_static("load", [](const std::string& path) { return load_checkpoint(path); }, py::arg("path"))
      .def_static(
          "from_checkpoint", [](const std::string& text) { return checkpoint_from_string(text); }, py::arg("text"))
      .def("save", [](const CnnGruModel& self, const std::string& path) { save_checkpoint(self, path); },
           py::arg("path"))
      .def("checkpoint", [](const CnnGruModel& self) { return checkpoint_to_string(self); })
      .def_property_readonly("arch", [](const CnnGruModel& self) { return std::string(to_string(self.arch)); })
      .def_property_readonly("param_count", [](const CnnGruModel& self) { return count_params(self); })
      .def_property_readonly("gru_param_count", [](const CnnGruModel& self) { return count_gru_params(self); })
      .def(
          "evaluate",
          [](const CnnGruModel& self, const std::string& prepared, const std::string& split) {
            const PreparedDataset data = read_prepared_dataset(prepared);
            return report_dict(evaluate(self, split_of(data, split)));
          },
          py::arg("prepared_dir"), py::arg("split") = "test")
      .def(
          "predict",
          [](const CnnGruModel& self, const std::string& prepared, const std::string& split) {
            const PreparedDataset data = read_prepared_dataset(prepared);
            py::list out;
            for (const DailyPrediction& d : predict_daily(self, split_of(data, split))) {
              py::dict row;
              row["date"] = format_date(d.date);
              row["predicted_class"] = std::string(to_string(d.predicted_class));
              row["probs"] = d.probs;
              row["predicted_return"] = d.predicted_return;
              out.append(row);
            }
            return out;
          },
          py::arg("prepared_dir"), py::arg("split") = "test");

  m.def(
      "train",
      [](const std::string& prepared, std::optional<std::string> config, std::optional<std::uint64_t> seed,
         std::optional<std::string> arch) {
        RunConfig cfg = config_from(config, seed);
        if (arch) {
          const auto parsed = parse_arch(*arch);
          if (!parsed) throw std::invalid_argument("unknown arch '" + *arch + "'");
          cfg.arch = *parsed;
        }
        const PreparedDataset data = read_prepared_dataset(prepared);
        ModelConfig mc = cfg.model;
        mc.vocab_size = data.vocab.size();
        mc.window = data.window;
        mc.max_doc_len = data.max_doc_len;
        TrainResult r = [&] {
          py::gil_scoped_release release;
          return sentirisk::train(build_model(mc, cfg.arch), data.splits.train, data.splits.val, cfg.train);
        }();
        py::list history;
        for (const EpochRecord& e : r.history) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["train_loss"] = e.train_loss;
          d["val_loss"] = e.val_loss;
          d["train_mse"] = e.train_mse;
          d["train_ce"] = e.train_ce;
          history.append(d);
        }
        return py::make_tuple(std::move(r.model), history);
      },
      py::arg("prepared_dir"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
      py::arg("arch") = py::none());
}
