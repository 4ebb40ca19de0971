#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "termrec/pipeline.hpp"
#include "termrec/serialize.hpp"
#include "termrec/synthgen.hpp"

namespace fs = std::filesystem;
using namespace termrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitModel = 4;

struct GlobalOpts {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    size_t threads = 0;
    bool flow_features_only = false;
};

PipelineConfig resolve_config(const GlobalOpts& g) {
    PipelineConfig cfg = g.config_path.empty() ? PipelineConfig() : PipelineConfig::load(g.config_path);
    if (g.seed_set) cfg.apply_master_seed(g.seed);
    if (g.threads > 0) cfg.threads = g.threads;
    if (g.flow_features_only) cfg.flow_features_only = true;
    return cfg;
}

std::unordered_map<uint32_t, TerminalType> load_labels(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    return parse_label_map(std::string(bytes.begin(), bytes.end()));
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        write_file(path, text);
}

// Plain-text PPM heatmap of the confusion matrix, one 32x32 cell per entry.
std::string confusion_ppm(const Matrix& confusion) {
    constexpr int kCell = 32;
    size_t n = confusion.rows();
    double max_v = 1.0;
    for (double v : confusion.data()) max_v = std::max(max_v, v);
    std::ostringstream out;
    out << "P3\n" << n * kCell << ' ' << n * kCell << "\n255\n";
    for (size_t r = 0; r < n; ++r) {
        std::ostringstream line;
        for (size_t c = 0; c < n; ++c) {
            int shade = 255 - static_cast<int>(240.0 * confusion.at(r, c) / max_v);
            for (int px = 0; px < kCell; ++px) line << shade << ' ' << shade << ' ' << shade << ' ';
        }
        std::string row_line = line.str();
        for (int py = 0; py < kCell; ++py) out << row_line << '\n';
    }
    return out.str();
}

int cmd_generate(const GlobalOpts& g, const std::string& out_dir) {
    PipelineConfig cfg = resolve_config(g);
    Dataset data = generate_dataset(cfg.generator, cfg.behavior_table, cfg.header_comment());
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "capture.pcap").string(), data.pcap_bytes);
    write_file((fs::path(out_dir) / "labels.tsv").string(), data.label_map_text);
    write_file((fs::path(out_dir) / "manifest.tsv").string(), data.manifest_text);
    std::cout << "wrote " << out_dir << "/capture.pcap, labels.tsv, manifest.tsv\n";
    return kExitOk;
}

int cmd_train(const GlobalOpts& g, const std::string& pcap_path, const std::string& labels_path,
              const std::string& model_out, const std::string& report_out,
              const std::string& dump_features, const std::string& dump_loss) {
    PipelineConfig cfg = resolve_config(g);
    std::vector<uint8_t> pcap_bytes = read_file(pcap_path);
    auto labels = load_labels(labels_path);
    TrainResult result = train_pipeline(cfg, pcap_bytes, labels);
    result.pipeline.save(model_out);
    emit(report_out, result.report_text);
    if (!dump_features.empty()) {
        std::string tsv = cfg.header_comment() +
                          feature_matrix_tsv(result.encoded.inputs,
                                             cfg.flow_features_only
                                                 ? std::vector<std::string>(kFlowFeatureNames.begin(),
                                                                            kFlowFeatureNames.end())
                                                 : classifier_input_names(cfg.clustering.clusters),
                                             result.encoded.ids);
        write_file(dump_features, tsv);
    }
    if (!dump_loss.empty()) {
        std::ostringstream out;
        out << cfg.header_comment() << "epoch\tloss\n";
        for (size_t i = 0; i < result.ae_loss_curve.size(); ++i) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", result.ae_loss_curve[i]);
            out << i << '\t' << buf << '\n';
        }
        write_file(dump_loss, out.str());
    }
    return kExitOk;
}

int cmd_predict(const GlobalOpts& g, const std::string& model_path, const std::string& pcap_path,
                const std::string& labels_path, const std::string& out_path) {
    TrainedPipeline pipe = TrainedPipeline::load(model_path);
    if (g.flow_features_only) pipe.config.flow_features_only = true;
    std::vector<uint8_t> pcap_bytes = read_file(pcap_path);
    std::unordered_map<uint32_t, TerminalType> labels;
    if (!labels_path.empty()) labels = load_labels(labels_path);
    std::vector<PredictionRow> rows = predict_pipeline(pipe, pcap_bytes, labels);
    emit(out_path, predictions_tsv(rows, pipe.config));
    return kExitOk;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& predictions_path,
                 const std::string& labels_path, const std::string& out_path) {
    PipelineConfig cfg = resolve_config(g);
    std::vector<uint8_t> bytes = read_file(predictions_path);
    auto rows = parse_predictions_tsv(std::string(bytes.begin(), bytes.end()));
    auto labels = load_labels(labels_path);
    MetricsReport report = evaluate_predictions(rows, labels, cfg.eq_literal_accuracy);
    std::vector<std::string> names = terminal_class_names();
    emit(out_path, cfg.header_comment() + report.to_text(names) + report.confusion_tsv(names));
    return kExitOk;
}

int cmd_report(const GlobalOpts& g, const std::string& predictions_path,
               const std::string& labels_path, const std::string& out_path,
               const std::string& image_path) {
    PipelineConfig cfg = resolve_config(g);
    std::vector<uint8_t> bytes = read_file(predictions_path);
    auto rows = parse_predictions_tsv(std::string(bytes.begin(), bytes.end()));
    auto labels = load_labels(labels_path);
    MetricsReport report = evaluate_predictions(rows, labels, cfg.eq_literal_accuracy);
    std::vector<std::string> names = terminal_class_names();
    std::ostringstream out;
    out << cfg.header_comment() << "termrec evaluation report\nflows = " << rows.size() << "\n"
        << report.to_text(names) << report.confusion_tsv(names);
    emit(out_path, out.str());
    if (!image_path.empty()) write_file(image_path, confusion_ppm(report.confusion));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid terminal recognition pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "pipeline configuration file (JSON)");
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed overriding the config");
    app.add_option("--threads", g.threads, "worker thread cap");
    app.add_flag("--flow-features-only", g.flow_features_only,
                 "classify on flow features alone (no segment encoding)");

    std::string out_dir = "data";
    auto* gen = app.add_subcommand("generate", "write a synthetic labeled capture");
    gen->add_option("--out-dir", out_dir, "output directory");

    std::string pcap_path, labels_path, model_path = "model.tpl", report_path, out_path;
    std::string dump_features, dump_loss, image_path;
    auto* train = app.add_subcommand("train", "train the pipeline on a labeled capture");
    train->add_option("--pcap", pcap_path, "training capture")->required();
    train->add_option("--labels", labels_path, "ip -> terminal type map")->required();
    train->add_option("--model-out", model_path, "trained pipeline artifact path");
    train->add_option("--report-out", report_path, "training report path (default stdout)");
    train->add_option("--dump-features", dump_features, "classifier input matrix TSV");
    train->add_option("--dump-loss", dump_loss, "autoencoder loss curve TSV");

    auto* predict = app.add_subcommand("predict", "classify flows of a capture");
    predict->add_option("--model", model_path, "trained pipeline artifact")->required();
    predict->add_option("--pcap", pcap_path, "capture to classify")->required();
    predict->add_option("--labels", labels_path, "optional truth map for the output");
    predict->add_option("--out", out_path, "predictions TSV path (default stdout)");

    std::string predictions_path;
    auto* evaluate = app.add_subcommand("evaluate", "score a predictions file");
    evaluate->add_option("--predictions", predictions_path, "predictions TSV")->required();
    evaluate->add_option("--labels", labels_path, "ip -> terminal type map")->required();
    evaluate->add_option("--out", out_path, "metrics report path (default stdout)");

    auto* report = app.add_subcommand("report", "render metrics and confusion matrix");
    report->add_option("--predictions", predictions_path, "predictions TSV")->required();
    report->add_option("--labels", labels_path, "ip -> terminal type map")->required();
    report->add_option("--out", out_path, "report path (default stdout)");
    report->add_option("--image", image_path, "confusion matrix heatmap (PPM)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    g.seed_set = seed_opt->count() > 0;

    try {
        if (gen->parsed()) return cmd_generate(g, out_dir);
        if (train->parsed())
            return cmd_train(g, pcap_path, labels_path, model_path, report_path, dump_features,
                             dump_loss);
        if (predict->parsed()) return cmd_predict(g, model_path, pcap_path, labels_path, out_path);
        if (evaluate->parsed()) return cmd_evaluate(g, predictions_path, labels_path, out_path);
        if (report->parsed()) return cmd_report(g, predictions_path, labels_path, out_path, image_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const VersionMismatch& e) {
        std::cerr << "error: model: " << e.what() << "\n";
        return kExitModel;
    } catch (const Error& e) {
        std::string what = e.what();
        if (what.rfind("pipeline artifact", 0) == 0) {
            std::cerr << "error: model: " << what << "\n";
            return kExitModel;
        }
        std::cerr << "error: data: " << what << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
