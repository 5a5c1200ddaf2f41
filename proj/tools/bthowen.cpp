#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bthowen/bthowen.hpp"

namespace {

struct DataArgs {
  std::string format = "delimited";
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string train_data;
  std::string test_data;
  std::string delimiter = ",";
  int label_column = -1;
  bool header = false;
};

char resolve_delimiter(const std::string& text) {
  if (text == "tab") return '\t';
  if (text == "space") return ' ';
  if (text.size() != 1) {
    throw std::runtime_error("delimiter must be a single character, 'tab', or 'space'");
  }
  return text[0];
}

void add_train_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--format", args.format, "Input format: idx or delimited")
      ->check(CLI::IsMember({"idx", "delimited"}));
  cmd->add_option("--train-images", args.train_images, "IDX image file (training)");
  cmd->add_option("--train-labels", args.train_labels, "IDX label file (training)");
  cmd->add_option("--train-data", args.train_data, "Delimited file with labeled rows (training)");
  cmd->add_option("--delimiter", args.delimiter, "Field delimiter, or 'tab'/'space'");
  cmd->add_option("--label-column", args.label_column,
                  "Label field index; negative counts from the end");
  cmd->add_flag("--header", args.header, "Skip the first non-empty line");
}

void add_test_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--test-images", args.test_images, "IDX image file (test)");
  cmd->add_option("--test-labels", args.test_labels, "IDX label file (test)");
  cmd->add_option("--test-data", args.test_data, "Delimited file with labeled rows (test)");
}

bthowen::LabeledDataset load_train(const DataArgs& args) {
  if (args.format == "idx") {
    if (args.train_images.empty() || args.train_labels.empty()) {
      throw std::runtime_error("idx format needs --train-images and --train-labels");
    }
    return bthowen::load_idx(args.train_images, args.train_labels);
  }
  if (args.train_data.empty()) throw std::runtime_error("delimited format needs --train-data");
  return bthowen::load_delimited(args.train_data, resolve_delimiter(args.delimiter),
                                 args.label_column, args.header);
}

bool has_test(const DataArgs& args) {
  return args.format == "idx" ? !args.test_images.empty() : !args.test_data.empty();
}

bthowen::LabeledDataset load_test(const DataArgs& args,
                                  const std::vector<std::string>& label_names) {
  if (args.format == "idx") {
    if (args.test_images.empty() || args.test_labels.empty()) {
      throw std::runtime_error("idx format needs --test-images and --test-labels");
    }
    return bthowen::load_idx(args.test_images, args.test_labels);
  }
  return bthowen::load_delimited(args.test_data, resolve_delimiter(args.delimiter),
                                 args.label_column, args.header,
                                 label_names.empty() ? nullptr : &label_names);
}

struct ConfigArgs {
  uint32_t bits_per_input = 8;
  uint32_t inputs_per_filter = 28;
  uint32_t entries = 1024;
  uint32_t hashes = 2;
  uint64_t seed = 0;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--bits-per-input", args.bits_per_input, "Thermometer bits per feature");
  cmd->add_option("--inputs-per-filter", args.inputs_per_filter, "Bits per filter");
  cmd->add_option("--entries", args.entries, "Counters per filter (power of two)");
  cmd->add_option("--hashes", args.hashes, "Hash functions per filter");
  cmd->add_option("--seed", args.seed, "RNG seed for the input mapping and hash parameters");
  cmd->add_option("--config", args.overrides,
                  "key=value overrides (t, n, entries, k, seed); may repeat")
      ->delimiter(',');
}

void apply_overrides(ConfigArgs& args) {
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
      throw std::runtime_error("bad --config entry '" + kv + "', expected key=value");
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      if (key == "t") {
        args.bits_per_input = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "n") {
        args.inputs_per_filter = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "entries") {
        args.entries = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "k") {
        args.hashes = static_cast<uint32_t>(std::stoul(value));
      } else if (key == "seed") {
        args.seed = std::stoull(value);
      } else {
        throw std::runtime_error("unknown --config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("bad --config value in '" + kv + "'");
    }
  }
}

bthowen::ModelConfig make_config(const ConfigArgs& args, const bthowen::LabeledDataset& train) {
  bthowen::ModelConfig config;
  config.feature_count = static_cast<uint32_t>(train.feature_count);
  config.class_count = train.class_count;
  config.bits_per_input = args.bits_per_input;
  config.inputs_per_filter = args.inputs_per_filter;
  config.entries = args.entries;
  config.hashes = args.hashes;
  config.seed = args.seed;
  config.validate();
  return config;
}

std::vector<uint32_t> parse_grid_list(const std::vector<uint32_t>& values, const char* name) {
  if (values.empty()) throw std::runtime_error(std::string("empty grid for ") + name);
  return values;
}

int run_train(const DataArgs& data, ConfigArgs config_args, double val_fraction,
              double holdout_fraction, bool binarize, const std::string& out_path) {
  apply_overrides(config_args);
  bthowen::LabeledDataset full = load_train(data);

  bthowen::LabeledDataset train = std::move(full);
  bthowen::LabeledDataset holdout;
  bool have_holdout = false;
  if (holdout_fraction > 0.0) {
    auto parts = bthowen::split(train, 1.0 - holdout_fraction, config_args.seed);
    train = std::move(parts.first);
    holdout = std::move(parts.second);
    have_holdout = true;
  }

  auto parts = bthowen::split(train, 1.0 - val_fraction, config_args.seed);
  const bthowen::ModelConfig config = make_config(config_args, train);
  bthowen::BthowenModel model(config);
  model.train(parts.first);
  const bthowen::BleachSelection sel = model.select_bleach(parts.second);

  std::cout << "train_samples=" << parts.first.size() << '\n';
  std::cout << "validation_samples=" << parts.second.size() << '\n';
  std::cout << "b=" << sel.b << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", sel.accuracy);
  std::cout << "val_acc=" << buf << '\n';
  std::cout << "payload_kib=" << bthowen::format_significant(bthowen::payload_kib(config), 3)
            << '\n';

  if (binarize) model = model.binarized(sel.b);

  const auto report_accuracy = [&](const char* key, const bthowen::LabeledDataset& ds) {
    std::snprintf(buf, sizeof buf, "%.6f", model.evaluate(ds, sel.b));
    std::cout << key << '=' << buf << '\n';
  };
  if (have_holdout) report_accuracy("test_acc", holdout);
  if (has_test(data)) {
    const bthowen::LabeledDataset test = load_test(data, model.label_names());
    report_accuracy("test_acc", test);
  }

  if (!out_path.empty()) {
    bthowen::save_model(model, out_path);
    std::cout << "model=" << out_path << '\n';
  }
  return 0;
}

int run_evaluate(const DataArgs& data, const std::string& model_path, uint32_t bleach) {
  const bthowen::BthowenModel model = bthowen::load_model(model_path);
  const bthowen::LabeledDataset test = load_test(data, model.label_names());
  if (test.class_count > model.config().class_count) {
    throw std::runtime_error("test set has more classes than the model");
  }
  char buf[64];
  std::cout << "samples=" << test.size() << '\n';
  std::cout << "b=" << (model.binarized() ? 1 : (bleach != 0 ? bleach : model.selected_bleach()))
            << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", model.evaluate(test, bleach));
  std::cout << "accuracy=" << buf << '\n';
  return 0;
}

int run_predict(const DataArgs& data, const std::string& model_path, const std::string& images,
                const std::string& rows_path, uint32_t bleach) {
  const bthowen::BthowenModel model = bthowen::load_model(model_path);
  bthowen::FeatureMatrix input;
  if (!images.empty()) {
    input = bthowen::load_idx_images(images);
  } else if (!rows_path.empty()) {
    input = bthowen::load_delimited_features(rows_path, resolve_delimiter(data.delimiter),
                                             data.header);
  } else {
    throw std::runtime_error("predict needs --images or --data");
  }
  const auto& names = model.label_names();
  for (size_t i = 0; i < input.size(); ++i) {
    const uint32_t cls = model.predict(input.row(i), bleach);
    if (cls < names.size()) {
      std::cout << names[cls] << '\n';
    } else {
      std::cout << cls << '\n';
    }
  }
  return 0;
}

int run_sweep_cmd(const DataArgs& data, uint64_t seed, double val_fraction, unsigned workers,
                  bool timing, bool use_default_grid, std::vector<uint32_t> grid_bits,
                  std::vector<uint32_t> grid_inputs, std::vector<uint32_t> grid_entries,
                  std::vector<uint32_t> grid_hashes, const std::string& out_path,
                  const std::string& dataset_name, bool print_pareto) {
  bthowen::LabeledDataset train = load_train(data);
  if (!has_test(data)) throw std::runtime_error("sweep needs a test set");
  const bthowen::LabeledDataset test = load_test(data, train.label_names);

  bthowen::SweepGrid grid;
  if (use_default_grid) {
    grid = bthowen::SweepGrid::image_default();
  } else {
    grid.bits_per_input = parse_grid_list(grid_bits, "--grid-bits");
    grid.inputs_per_filter = parse_grid_list(grid_inputs, "--grid-inputs");
    grid.entries = parse_grid_list(grid_entries, "--grid-entries");
    grid.hashes = parse_grid_list(grid_hashes, "--grid-hashes");
  }

  bthowen::SweepOptions options;
  options.workers = workers;
  options.record_timing = timing;
  options.validation_fraction = val_fraction;

  const auto results =
      bthowen::run_sweep(dataset_name, train, test, grid, seed, options, out_path);

  std::cout << "points=" << results.size() << '\n';
  if (!out_path.empty()) std::cout << "results=" << out_path << '\n';

  const auto frontier = bthowen::pareto_frontier(results);
  if (!frontier.empty()) {
    const auto& best = frontier.back();
    char buf[160];
    std::snprintf(buf, sizeof buf, "best: t=%u n=%u entries=%u k=%u b=%u test_acc=%.6f size_kib=%g",
                  best.bits_per_input, best.inputs_per_filter, best.entries, best.hashes,
                  best.bleach, best.test_acc, best.size_kib);
    std::cout << buf << '\n';
    if (print_pareto) {
      for (const auto& row : frontier) {
        std::snprintf(buf, sizeof buf, "pareto: t=%u n=%u entries=%u k=%u b=%u test_acc=%.6f size_kib=%g",
                      row.bits_per_input, row.inputs_per_filter, row.entries, row.hashes,
                      row.bleach, row.test_acc, row.size_kib);
        std::cout << buf << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weightless neural network classifier built on counting Bloom filters"};
  app.require_subcommand(1);

  DataArgs data;
  ConfigArgs config_args;
  double val_fraction = 0.1;
  double holdout_fraction = 0.0;
  bool binarize = false;
  std::string out_path;
  std::string model_path;
  uint32_t bleach = 0;

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model in one pass");
  add_train_data_options(train_cmd, data);
  add_test_data_options(train_cmd, data);
  add_config_options(train_cmd, config_args);
  train_cmd->add_option("--val-fraction", val_fraction,
                        "Fraction of training data held out for bleach selection")
      ->check(CLI::Range(0.01, 0.5));
  train_cmd->add_option("--holdout-fraction", holdout_fraction,
                        "Carve a seeded test split off the training file (0 = off)")
      ->check(CLI::Range(0.0, 0.9));
  train_cmd->add_flag("--binarize", binarize, "Store plain Bloom filters thresholded at b");
  train_cmd->add_option("--out", out_path, "Where to write the model");

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score a stored model on labeled data");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  add_train_data_options(eval_cmd, data);
  add_test_data_options(eval_cmd, data);
  eval_cmd->add_option("--bleach", bleach, "Override the stored bleach threshold");

  std::string predict_images;
  std::string predict_rows;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Print one label per input row");
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--images", predict_images, "IDX image file");
  predict_cmd->add_option("--data", predict_rows, "Delimited file of feature rows (no label)");
  predict_cmd->add_option("--delimiter", data.delimiter, "Field delimiter, or 'tab'/'space'");
  predict_cmd->add_flag("--header", data.header, "Skip the first non-empty line");
  predict_cmd->add_option("--bleach", bleach, "Override the stored bleach threshold");

  uint64_t sweep_seed = 0;
  unsigned workers = 1;
  bool timing = false;
  bool use_default_grid = false;
  bool print_pareto = false;
  std::string dataset_name = "dataset";
  std::vector<uint32_t> grid_bits, grid_inputs, grid_entries, grid_hashes;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid-search hyperparameters");
  add_train_data_options(sweep_cmd, data);
  add_test_data_options(sweep_cmd, data);
  sweep_cmd->add_option("--name", dataset_name, "Dataset name recorded in the results file");
  sweep_cmd->add_option("--seed", sweep_seed, "Base seed; each point derives its own");
  sweep_cmd->add_option("--val-fraction", val_fraction,
                        "Fraction of training data held out for bleach selection")
      ->check(CLI::Range(0.01, 0.5));
  sweep_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 256u));
  sweep_cmd->add_flag("--timing", timing,
                      "Record wall-clock seconds (makes result files nondeterministic)");
  sweep_cmd->add_flag("--default-grid", use_default_grid,
                      "Use the 1008-point image classification grid");
  sweep_cmd->add_option("--grid-bits", grid_bits, "Thermometer bits values")->delimiter(',');
  sweep_cmd->add_option("--grid-inputs", grid_inputs, "Bits-per-filter values")->delimiter(',');
  sweep_cmd->add_option("--grid-entries", grid_entries, "Filter entry counts")->delimiter(',');
  sweep_cmd->add_option("--grid-hashes", grid_hashes, "Hash counts")->delimiter(',');
  sweep_cmd->add_option("--out", out_path, "Results file (CSV); appends missing points");
  sweep_cmd->add_flag("--pareto", print_pareto, "Print the accuracy/size frontier");

  CLI::App* inspect_cmd = app.add_subcommand("inspect", "Describe a stored model");
  inspect_cmd->add_option("--model", model_path, "Model file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      return run_train(data, config_args, val_fraction, holdout_fraction, binarize, out_path);
    }
    if (*eval_cmd) return run_evaluate(data, model_path, bleach);
    if (*predict_cmd) return run_predict(data, model_path, predict_images, predict_rows, bleach);
    if (*sweep_cmd) {
      return run_sweep_cmd(data, sweep_seed, val_fraction, workers, timing, use_default_grid,
                           grid_bits, grid_inputs, grid_entries, grid_hashes, out_path,
                           dataset_name, print_pareto);
    }
    if (*inspect_cmd) {
      std::cout << bthowen::inspect_model(model_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
