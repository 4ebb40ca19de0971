#include "termrec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "termrec/rng.hpp"
#include "termrec/serialize.hpp"

namespace termrec {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw Error("bad numeric field: " + s);
    }
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t tab = line.find('\t', pos);
        if (tab == std::string::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    return out;
}

Matrix standardizer_matrix(const Standardizer& s) {
    Matrix m(2, s.mu.size());
    for (size_t i = 0; i < s.mu.size(); ++i) {
        m.at(0, i) = s.mu[i];
        m.at(1, i) = s.sigma[i];
    }
    return m;
}

Standardizer standardizer_from_block(const Block& b) {
    if (b.rows != 2) throw Error("pipeline artifact: standardizer block needs 2 rows");
    Standardizer s;
    s.mu.assign(b.values.begin(), b.values.begin() + static_cast<long>(b.cols));
    s.sigma.assign(b.values.begin() + static_cast<long>(b.cols), b.values.end());
    return s;
}

Block expect_block(std::istream& in, const std::string& name) {
    Block b = read_block(in);
    if (b.name != name)
        throw Error("pipeline artifact: expected block '" + name + "', got '" + b.name + "'");
    return b;
}

void append_regression_tree(std::vector<double>& out, const RegressionTree& tree) {
    out.push_back(static_cast<double>(tree.nodes.size()));
    for (const auto& n : tree.nodes) {
        out.push_back(n.feature);
        out.push_back(n.threshold);
        out.push_back(n.left);
        out.push_back(n.right);
        out.push_back(n.value);
    }
}

RegressionTree read_regression_tree(const std::vector<double>& v, size_t& pos) {
    RegressionTree tree;
    size_t count = static_cast<size_t>(v.at(pos++));
    tree.nodes.resize(count);
    for (auto& n : tree.nodes) {
        n.feature = static_cast<int>(v.at(pos++));
        n.threshold = v.at(pos++);
        n.left = static_cast<int>(v.at(pos++));
        n.right = static_cast<int>(v.at(pos++));
        n.value = v.at(pos++);
    }
    return tree;
}

void append_classification_tree(std::vector<double>& out, const ClassificationTree& tree) {
    out.push_back(static_cast<double>(tree.nodes.size()));
    out.push_back(static_cast<double>(tree.n_classes));
    for (const auto& n : tree.nodes) {
        out.push_back(n.feature);
        out.push_back(n.threshold);
        out.push_back(n.left);
        out.push_back(n.right);
        for (size_t c = 0; c < tree.n_classes; ++c)
            out.push_back(c < n.distribution.size() ? n.distribution[c] : 0.0);
    }
}

ClassificationTree read_classification_tree(const std::vector<double>& v, size_t& pos) {
    ClassificationTree tree;
    size_t count = static_cast<size_t>(v.at(pos++));
    tree.n_classes = static_cast<size_t>(v.at(pos++));
    tree.nodes.resize(count);
    for (auto& n : tree.nodes) {
        n.feature = static_cast<int>(v.at(pos++));
        n.threshold = v.at(pos++);
        n.left = static_cast<int>(v.at(pos++));
        n.right = static_cast<int>(v.at(pos++));
        n.distribution.resize(tree.n_classes);
        for (size_t c = 0; c < tree.n_classes; ++c) n.distribution[c] = v.at(pos++);
    }
    return tree;
}

void write_classifier(std::ostream& out, const ClassifierModel& model) {
    switch (model.kind) {
        case ClassifierKind::Gbt: {
            const GbtModel& g = model.gbt;
            write_block(out, "gbt_meta",
                        {static_cast<double>(g.n_classes), g.learning_rate,
                         static_cast<double>(g.stages.size())},
                        1, 3);
            write_block(out, "gbt_init", g.init_scores, 1, g.init_scores.size());
            std::vector<double> stream;
            for (const auto& stage : g.stages)
                for (const auto& tree : stage) append_regression_tree(stream, tree);
            write_block(out, "gbt_trees", stream, 1, stream.size());
            break;
        }
        case ClassifierKind::Logistic:
            write_block(out, "lr_w", model.logistic.w);
            write_block(out, "lr_b", model.logistic.b, 1, model.logistic.b.size());
            break;
        case ClassifierKind::RandomForest: {
            const ForestModel& f = model.forest;
            write_block(out, "forest_meta",
                        {static_cast<double>(f.n_classes), static_cast<double>(f.trees.size())},
                        1, 2);
            std::vector<double> stream;
            for (const auto& tree : f.trees) append_classification_tree(stream, tree);
            write_block(out, "forest_trees", stream, 1, stream.size());
            break;
        }
        case ClassifierKind::AdaBoost: {
            const AdaBoostModel& a = model.adaboost;
            write_block(out, "ada_meta",
                        {static_cast<double>(a.n_classes), static_cast<double>(a.stumps.size())},
                        1, 2);
            write_block(out, "ada_alphas", a.alphas, 1, a.alphas.size());
            std::vector<double> stream;
            for (const auto& stump : a.stumps) append_classification_tree(stream, stump);
            write_block(out, "ada_stumps", stream, 1, stream.size());
            break;
        }
        case ClassifierKind::NeuralNet: {
            std::vector<double> sizes;
            for (size_t s : model.nn.layer_sizes) sizes.push_back(static_cast<double>(s));
            write_block(out, "nn_sizes", sizes, 1, sizes.size());
            std::vector<double> params = flatten_parameters(model.nn);
            write_block(out, "nn_params", params, 1, params.size());
            break;
        }
    }
}

ClassifierModel read_classifier(std::istream& in, ClassifierKind kind) {
    ClassifierModel model;
    model.kind = kind;
    switch (kind) {
        case ClassifierKind::Gbt: {
            Block meta = expect_block(in, "gbt_meta");
            model.gbt.n_classes = static_cast<size_t>(meta.values.at(0));
            model.gbt.learning_rate = meta.values.at(1);
            size_t stages = static_cast<size_t>(meta.values.at(2));
            model.gbt.init_scores = expect_block(in, "gbt_init").values;
            Block trees = expect_block(in, "gbt_trees");
            size_t pos = 0;
            model.gbt.stages.resize(stages);
            for (auto& stage : model.gbt.stages) {
                stage.reserve(model.gbt.n_classes);
                for (size_t c = 0; c < model.gbt.n_classes; ++c)
                    stage.push_back(read_regression_tree(trees.values, pos));
            }
            model.n_classes = model.gbt.n_classes;
            break;
        }
        case ClassifierKind::Logistic: {
            model.logistic.w = expect_block(in, "lr_w").as_matrix();
            model.logistic.b = expect_block(in, "lr_b").values;
            model.n_classes = model.logistic.b.size();
            break;
        }
        case ClassifierKind::RandomForest: {
            Block meta = expect_block(in, "forest_meta");
            model.forest.n_classes = static_cast<size_t>(meta.values.at(0));
            size_t n_trees = static_cast<size_t>(meta.values.at(1));
            Block trees = expect_block(in, "forest_trees");
            size_t pos = 0;
            for (size_t t = 0; t < n_trees; ++t)
                model.forest.trees.push_back(read_classification_tree(trees.values, pos));
            model.n_classes = model.forest.n_classes;
            break;
        }
        case ClassifierKind::AdaBoost: {
            Block meta = expect_block(in, "ada_meta");
            model.adaboost.n_classes = static_cast<size_t>(meta.values.at(0));
            size_t n_stumps = static_cast<size_t>(meta.values.at(1));
            model.adaboost.alphas = expect_block(in, "ada_alphas").values;
            Block stumps = expect_block(in, "ada_stumps");
            size_t pos = 0;
            for (size_t t = 0; t < n_stumps; ++t)
                model.adaboost.stumps.push_back(read_classification_tree(stumps.values, pos));
            model.n_classes = model.adaboost.n_classes;
            break;
        }
        case ClassifierKind::NeuralNet: {
            Block sizes = expect_block(in, "nn_sizes");
            std::vector<size_t> layer_sizes;
            for (double v : sizes.values) layer_sizes.push_back(static_cast<size_t>(v));
            model.nn = init_network(layer_sizes, 0);
            unflatten_parameters(model.nn, expect_block(in, "nn_params").values);
            model.n_classes = model.nn.output_dim();
            break;
        }
    }
    return model;
}

// Per-flow segment embedding rows [std TF | AE embedding] plus the cluster
// presence bits derived from them.
struct SegmentEncoding {
    std::vector<int> assignments;
    bool had_empty = false;
};

std::string metrics_section(const std::string& title, const MetricsReport& m,
                            const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "[" << title << "]\n" << m.to_text(names) << m.confusion_tsv(names);
    return out.str();
}

}  // namespace

std::vector<std::string> terminal_class_names() {
    std::vector<std::string> names;
    for (int c = 0; c < kTerminalTypes; ++c)
        names.push_back(terminal_type_name(static_cast<TerminalType>(c)));
    return names;
}

std::vector<FlowRecord> extract_flow_records(
    std::span<const uint8_t> pcap_bytes, const PipelineConfig& cfg,
    const std::unordered_map<uint32_t, TerminalType>& label_map, DatasetSummary* summary) {
    IngestStats stats;
    std::vector<ParsedPacket> packets = ingest_pcap(pcap_bytes, cfg.behavior_table, stats);
    if (packets.empty()) {
        // An empty (but well-formed) capture yields zero flows, not an error.
        if (summary) *summary = DatasetSummary{stats, {}, 0, 0, 0.0};
        return {};
    }

    double capture_start = packets.front().timestamp;
    double capture_end = packets.front().timestamp;
    for (const auto& p : packets) {
        capture_start = std::min(capture_start, p.timestamp);
        capture_end = std::max(capture_end, p.timestamp);
    }

    std::vector<Flow> flows = assemble_flows(packets, labeler_from_map(label_map));
    FilterResult filtered = filter_long_connections(std::move(flows), cfg.flow_filter.min_duration,
                                                    capture_end - capture_start);

    size_t clamped = 0;
    std::vector<FlowRecord> records;
    records.reserve(filtered.kept.size());
    for (const Flow& flow : filtered.kept) {
        FlowRecord rec;
        rec.id = flow.key.to_string();
        rec.label = flow.label;
        rec.ff = flow_features(flow);
        std::vector<Segment> segments = segment_flow(flow, capture_start, cfg.segmentation.tau,
                                                     cfg.segmentation.count, &clamped);
        rec.segments.reserve(segments.size());
        for (const Segment& seg : segments) rec.segments.push_back(segment_features(seg, flow));
        records.push_back(std::move(rec));
    }

    if (summary) {
        summary->ingest = stats;
        summary->filter = filtered.stats;
        summary->clamped_packets = clamped;
        summary->capture_start = capture_start;
        summary->labeled_flows = 0;
        for (const auto& rec : records)
            if (rec.label != TerminalType::Unlabeled) ++summary->labeled_flows;
    }
    return records;
}

SplitIndices stratified_split(const std::vector<int>& labels, const SplitConfig& cfg) {
    if (cfg.train <= 0.0 || cfg.validation < 0.0 || cfg.test < 0.0 ||
        cfg.train + cfg.validation + cfg.test > 1.0 + 1e-9)
        throw InvalidParams("split fractions must be non-negative and sum to at most 1");

    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) by_class[labels[i]].push_back(i);

    Rng rng(cfg.seed);
    SplitIndices out;
    for (auto& [cls, idx] : by_class) {
        (void)cls;
        rng.shuffle(idx);
        size_t n = idx.size();
        size_t n_val = static_cast<size_t>(std::floor(n * cfg.validation));
        size_t n_test = static_cast<size_t>(std::floor(n * cfg.test));
        size_t n_train = n - n_val - n_test;  // remainder goes to train
        for (size_t i = 0; i < n; ++i) {
            if (i < n_train)
                out.train.push_back(idx[i]);
            else if (i < n_train + n_val)
                out.validation.push_back(idx[i]);
            else
                out.test.push_back(idx[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

EncodedFlows encode_flows(const std::vector<FlowRecord>& records, const Standardizer& ff_std,
                          const Standardizer& tf_std, const Standardizer& bf_std,
                          const MlpNetwork* autoencoder, const ClusterModel* cluster,
                          bool flow_features_only, size_t k) {
    EncodedFlows out;
    for (const FlowRecord& rec : records) {
        std::vector<double> x_ff(kFlowFeatureDim);
        ff_std.apply_row(rec.ff.data(), x_ff.data());

        std::vector<double> input;
        if (flow_features_only) {
            input = x_ff;
        } else {
            if (!autoencoder || !cluster)
                throw InvalidParams("hierarchical encoding needs an autoencoder and clusters");
            Matrix h;
            bool had_empty = false;
            std::vector<double> tf_row(kFlowFeatureDim), bf_row(kBehaviorFeatureDim);
            for (const SegmentFeatures& seg : rec.segments) {
                if (seg.empty) {
                    had_empty = true;
                    continue;
                }
                tf_std.apply_row(seg.tf.data(), tf_row.data());
                bf_std.apply_row(seg.bf.data(), bf_row.data());
                AeForward fwd = ae_forward(*autoencoder, bf_row);
                std::vector<double> h_row = tf_row;
                h_row.insert(h_row.end(), fwd.embedding.begin(), fwd.embedding.end());
                h.append_row(h_row);
            }
            std::vector<int> z;
            if (!h.empty()) z = assign_clusters(*cluster, h);
            std::vector<uint8_t> x_se = encode_flow_clusters(z, had_empty, k);
            input = build_classifier_input(x_se, x_ff);
        }
        out.inputs.append_row(input);
        out.labels.push_back(static_cast<int>(rec.label));
        out.ids.push_back(rec.id);
    }
    return out;
}

ClassifierModel train_classifier_model(const ClassifierSection& cfg, const Matrix& x,
                                       const std::vector<int>& y, size_t n_classes) {
    ClassifierModel model;
    model.kind = cfg.kind;
    model.n_classes = n_classes;
    switch (cfg.kind) {
        case ClassifierKind::Gbt:
            model.gbt = train_gbt(x, y, n_classes, cfg.gbt);
            break;
        case ClassifierKind::Logistic:
            model.logistic = train_logistic(x, y, n_classes, cfg.logistic);
            break;
        case ClassifierKind::RandomForest: {
            ForestConfig fc = cfg.forest;
            if (fc.seed == 0) fc.seed = cfg.seed;
            model.forest = train_random_forest(x, y, n_classes, fc);
            break;
        }
        case ClassifierKind::AdaBoost: {
            AdaBoostConfig ac = cfg.adaboost;
            if (ac.seed == 0) ac.seed = cfg.seed;
            model.adaboost = train_adaboost(x, y, n_classes, ac);
            break;
        }
        case ClassifierKind::NeuralNet: {
            std::vector<size_t> sizes;
            sizes.push_back(x.cols());
            for (size_t s : cfg.neural_net.hidden) sizes.push_back(s);
            sizes.push_back(n_classes);
            model.nn = init_network(sizes, cfg.neural_net.train.seed);
            train_softmax(model.nn, x, y, n_classes, cfg.neural_net.train);
            break;
        }
    }
    return model;
}

namespace {

Matrix rows_subset(const Matrix& m, const std::vector<size_t>& idx) {
    Matrix out(0, 0);
    for (size_t i : idx) out.append_row(m.row(i), m.cols());
    return out;
}

MetricsReport evaluate_subset(const ClassifierModel& model, const EncodedFlows& encoded,
                              const std::vector<size_t>& idx, bool eq_literal) {
    if (idx.empty()) {
        MetricsReport empty;
        empty.tp.assign(kTerminalTypes, 0);
        empty.fp.assign(kTerminalTypes, 0);
        empty.fn.assign(kTerminalTypes, 0);
        empty.confusion = Matrix(kTerminalTypes, kTerminalTypes);
        return empty;
    }
    Matrix x = rows_subset(encoded.inputs, idx);
    std::vector<int> y_pred = model.predict(x);
    std::vector<int> y_true;
    for (size_t i : idx) y_true.push_back(encoded.labels[i]);
    return evaluate(y_true, y_pred, kTerminalTypes, eq_literal);
}

}  // namespace

TrainResult train_pipeline(const PipelineConfig& cfg, std::span<const uint8_t> pcap_bytes,
                           const std::unordered_map<uint32_t, TerminalType>& label_map) {
    TrainResult result;
    std::vector<FlowRecord> records =
        extract_flow_records(pcap_bytes, cfg, label_map, &result.summary);

    std::vector<int> labels;
    labels.reserve(records.size());
    for (const auto& rec : records) labels.push_back(static_cast<int>(rec.label));
    if (result.summary.labeled_flows == 0)
        throw EmptyInput("training capture has no labeled long flows");

    result.split = stratified_split(labels, cfg.split);
    if (result.split.train.empty()) throw EmptyInput("training split is empty");

    TrainedPipeline& pipe = result.pipeline;
    pipe.config = cfg;

    Matrix ff_train(0, 0);
    for (size_t i : result.split.train) ff_train.append_row(records[i].ff.data(), kFlowFeatureDim);
    pipe.ff_std = Standardizer::fit(ff_train);

    if (!cfg.flow_features_only) {
        Matrix tf_train(0, 0), bf_train(0, 0);
        for (size_t i : result.split.train) {
            for (const SegmentFeatures& seg : records[i].segments) {
                if (seg.empty) continue;
                tf_train.append_row(seg.tf.data(), kFlowFeatureDim);
                bf_train.append_row(seg.bf.data(), kBehaviorFeatureDim);
            }
        }
        if (bf_train.empty()) throw EmptyInput("training flows have no non-empty segments");
        pipe.tf_std = Standardizer::fit(tf_train);
        pipe.bf_std = Standardizer::fit(bf_train);

        Matrix bf_std_rows = pipe.bf_std.apply(bf_train);
        pipe.autoencoder =
            make_autoencoder(kBehaviorFeatureDim, cfg.autoencoder.hidden, cfg.autoencoder.train.seed);
        result.ae_loss_curve = train_autoencoder(pipe.autoencoder, bf_std_rows, cfg.autoencoder.train);

        Matrix tf_std_rows = pipe.tf_std.apply(tf_train);
        Matrix embeddings = encode_rows(pipe.autoencoder, bf_std_rows);
        Matrix h(0, 0);
        std::vector<double> h_row(tf_std_rows.cols() + embeddings.cols());
        for (size_t r = 0; r < tf_std_rows.rows(); ++r) {
            std::copy(tf_std_rows.row(r), tf_std_rows.row(r) + tf_std_rows.cols(), h_row.begin());
            std::copy(embeddings.row(r), embeddings.row(r) + embeddings.cols(),
                      h_row.begin() + static_cast<long>(tf_std_rows.cols()));
            h.append_row(h_row);
        }
        pipe.cluster =
            fit_cluster_model(cfg.clustering.kind, h, cfg.clustering.clusters, cfg.clustering.seed,
                              cfg.clustering.max_iterations, cfg.clustering.tolerance,
                              cfg.clustering.em_iterations);
    }

    result.encoded = encode_flows(records, pipe.ff_std, pipe.tf_std, pipe.bf_std,
                                  cfg.flow_features_only ? nullptr : &pipe.autoencoder,
                                  cfg.flow_features_only ? nullptr : &pipe.cluster,
                                  cfg.flow_features_only, cfg.clustering.clusters);

    Matrix x_train = rows_subset(result.encoded.inputs, result.split.train);
    std::vector<int> y_train;
    for (size_t i : result.split.train) y_train.push_back(result.encoded.labels[i]);
    pipe.classifier = train_classifier_model(cfg.classifier, x_train, y_train, kTerminalTypes);

    bool eq_lit = cfg.eq_literal_accuracy;
    result.train_metrics = evaluate_subset(pipe.classifier, result.encoded, result.split.train, eq_lit);
    result.validation_metrics =
        evaluate_subset(pipe.classifier, result.encoded, result.split.validation, eq_lit);
    result.test_metrics = evaluate_subset(pipe.classifier, result.encoded, result.split.test, eq_lit);

    // Full-capture metrics over every labeled flow: this is exactly what the
    // predict path reproduces from the saved artifact.
    std::vector<size_t> labeled_idx;
    for (size_t i = 0; i < records.size(); ++i)
        if (labels[i] >= 0) labeled_idx.push_back(i);
    pipe.training_metrics = evaluate_subset(pipe.classifier, result.encoded, labeled_idx, eq_lit);

    std::vector<std::string> names = terminal_class_names();
    std::ostringstream report;
    report << cfg.header_comment();
    report << "termrec training report\n";
    report << "classifier = " << classifier_kind_name(cfg.classifier.kind) << "\n";
    report << "flow_features_only = " << (cfg.flow_features_only ? 1 : 0) << "\n";
    report << "records = " << result.summary.ingest.records
           << "\npackets = " << result.summary.ingest.packets
           << "\nskipped_non_ipv4 = " << result.summary.ingest.skipped_non_ipv4
           << "\nskipped_non_tcp = " << result.summary.ingest.skipped_non_tcp
           << "\nmalformed = " << result.summary.ingest.malformed << "\n";
    report << "flows_total = " << result.summary.filter.total
           << "\nflows_long = " << result.summary.filter.kept
           << "\nflows_short = " << result.summary.filter.dropped
           << "\nlong_fraction = " << fmt(result.summary.filter.long_fraction) << "\n";
    report << "clamped_packets = " << result.summary.clamped_packets
           << "\nlabeled_flows = " << result.summary.labeled_flows << "\n";
    report << "split_train = " << result.split.train.size()
           << "\nsplit_validation = " << result.split.validation.size()
           << "\nsplit_test = " << result.split.test.size() << "\n";
    if (!cfg.flow_features_only) {
        report << "ae_epochs = " << result.ae_loss_curve.size() << "\n";
        if (!result.ae_loss_curve.empty())
            report << "ae_final_loss = " << fmt(result.ae_loss_curve.back()) << "\n";
        if (cfg.clustering.kind == ClusterKind::KMeans)
            report << "kmeans_inertia = " << fmt(pipe.cluster.kmeans.inertia) << "\n";
        else if (!pipe.cluster.gmm.loglik_history.empty())
            report << "gmm_loglik = " << fmt(pipe.cluster.gmm.loglik_history.back()) << "\n";
    }
    report << "training_accuracy = " << fmt(pipe.training_metrics.accuracy) << "\n";
    report << "\n" << metrics_section("train", result.train_metrics, names);
    report << "\n" << metrics_section("validation", result.validation_metrics, names);
    report << "\n" << metrics_section("test", result.test_metrics, names);
    result.report_text = report.str();
    return result;
}

void TrainedPipeline::save(const std::string& path) const {
    std::ostringstream out;
    out << "TERMREC-PIPELINE v" << kFormatVersion << "\n";
    out << "config_hash " << config.hash_hex() << "\n";
    out << "[config]\n" << config.to_json_text() << "\n[endconfig]\n";
    out << "[behavior_table]\n" << config.behavior_table.to_text() << "[endtable]\n";

    write_block(out, "ff_std", standardizer_matrix(ff_std));
    if (!config.flow_features_only) {
        write_block(out, "tf_std", standardizer_matrix(tf_std));
        write_block(out, "bf_std", standardizer_matrix(bf_std));

        std::vector<double> sizes;
        sizes.push_back(static_cast<double>(autoencoder.embedding_layer));
        for (size_t s : autoencoder.layer_sizes) sizes.push_back(static_cast<double>(s));
        write_block(out, "ae_sizes", sizes, 1, sizes.size());
        std::vector<double> params = flatten_parameters(autoencoder);
        write_block(out, "ae_params", params, 1, params.size());

        if (cluster.kind == ClusterKind::KMeans) {
            write_block(out, "km_centroids", cluster.kmeans.centroids);
            write_block(out, "km_inertia", {cluster.kmeans.inertia}, 1, 1);
        } else {
            write_block(out, "gmm_weights", cluster.gmm.weights, 1, cluster.gmm.weights.size());
            write_block(out, "gmm_means", cluster.gmm.means);
            write_block(out, "gmm_variances", cluster.gmm.variances);
        }
    }
    write_classifier(out, classifier);
    write_block(out, "training_metrics",
                {training_metrics.accuracy, training_metrics.precision_macro,
                 training_metrics.recall_macro, training_metrics.f1_macro},
                1, 4);
    write_file(path, out.str());
}

TrainedPipeline TrainedPipeline::load(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));

    std::string line;
    if (!std::getline(in, line)) throw VersionMismatch("pipeline artifact: empty file");
    if (line != "TERMREC-PIPELINE v1")
        throw VersionMismatch("pipeline artifact: unsupported format line: " + line);
    if (!std::getline(in, line) || line.rfind("config_hash ", 0) != 0)
        throw Error("pipeline artifact: missing config_hash line");
    std::string stored_hash = line.substr(12);

    if (!std::getline(in, line) || line != "[config]")
        throw Error("pipeline artifact: missing [config] section");
    std::string config_text;
    while (std::getline(in, line) && line != "[endconfig]") config_text += line + "\n";

    TrainedPipeline pipe;
    pipe.config = PipelineConfig::from_json_text(config_text);
    if (pipe.config.hash_hex() != stored_hash)
        throw Error("pipeline artifact: config hash mismatch");

    if (!std::getline(in, line) || line != "[behavior_table]")
        throw Error("pipeline artifact: missing [behavior_table] section");
    std::string table_text;
    while (std::getline(in, line) && line != "[endtable]") table_text += line + "\n";
    pipe.config.behavior_table = BehaviorCodeTable::parse(table_text);

    pipe.ff_std = standardizer_from_block(expect_block(in, "ff_std"));
    if (!pipe.config.flow_features_only) {
        pipe.tf_std = standardizer_from_block(expect_block(in, "tf_std"));
        pipe.bf_std = standardizer_from_block(expect_block(in, "bf_std"));

        Block sizes = expect_block(in, "ae_sizes");
        std::vector<size_t> layer_sizes;
        for (size_t i = 1; i < sizes.values.size(); ++i)
            layer_sizes.push_back(static_cast<size_t>(sizes.values[i]));
        pipe.autoencoder = init_network(layer_sizes, 0);
        pipe.autoencoder.embedding_layer = static_cast<size_t>(sizes.values.at(0));
        unflatten_parameters(pipe.autoencoder, expect_block(in, "ae_params").values);

        pipe.cluster.kind = pipe.config.clustering.kind;
        pipe.cluster.k = pipe.config.clustering.clusters;
        if (pipe.cluster.kind == ClusterKind::KMeans) {
            pipe.cluster.kmeans.centroids = expect_block(in, "km_centroids").as_matrix();
            pipe.cluster.kmeans.inertia = expect_block(in, "km_inertia").values.at(0);
        } else {
            pipe.cluster.gmm.weights = expect_block(in, "gmm_weights").values;
            pipe.cluster.gmm.means = expect_block(in, "gmm_means").as_matrix();
            pipe.cluster.gmm.variances = expect_block(in, "gmm_variances").as_matrix();
        }
    }
    pipe.classifier = read_classifier(in, pipe.config.classifier.kind);

    Block metrics = expect_block(in, "training_metrics");
    pipe.training_metrics.accuracy = metrics.values.at(0);
    pipe.training_metrics.precision_macro = metrics.values.at(1);
    pipe.training_metrics.recall_macro = metrics.values.at(2);
    pipe.training_metrics.f1_macro = metrics.values.at(3);
    return pipe;
}

std::vector<PredictionRow> predict_pipeline(
    const TrainedPipeline& pipeline, std::span<const uint8_t> pcap_bytes,
    const std::unordered_map<uint32_t, TerminalType>& label_map) {
    const PipelineConfig& cfg = pipeline.config;
    std::vector<FlowRecord> records = extract_flow_records(pcap_bytes, cfg, label_map);
    if (records.empty()) return {};

    EncodedFlows encoded = encode_flows(records, pipeline.ff_std, pipeline.tf_std, pipeline.bf_std,
                                        cfg.flow_features_only ? nullptr : &pipeline.autoencoder,
                                        cfg.flow_features_only ? nullptr : &pipeline.cluster,
                                        cfg.flow_features_only, cfg.clustering.clusters);

    Matrix proba = pipeline.classifier.predict_proba(encoded.inputs);
    std::vector<PredictionRow> rows;
    rows.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        PredictionRow row;
        row.flow_id = encoded.ids[i];
        row.truth = static_cast<TerminalType>(encoded.labels[i]);
        size_t best = 0;
        for (size_t c = 1; c < proba.cols(); ++c)
            if (proba.at(i, c) > proba.at(i, best)) best = c;
        row.predicted = static_cast<TerminalType>(static_cast<int>(best));
        row.probabilities.assign(proba.row(i), proba.row(i) + proba.cols());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string predictions_tsv(const std::vector<PredictionRow>& rows, const PipelineConfig& cfg) {
    std::ostringstream out;
    out << cfg.header_comment();
    out << "flow_id\ttrue_label\tpredicted";
    for (const std::string& name : terminal_class_names()) out << "\tp_" << name;
    out << "\n";
    for (const PredictionRow& row : rows) {
        out << row.flow_id << '\t'
            << (row.truth == TerminalType::Unlabeled ? "?" : terminal_type_name(row.truth)) << '\t'
            << terminal_type_name(row.predicted);
        for (double p : row.probabilities) out << '\t' << fmt(p);
        out << "\n";
    }
    return out.str();
}

std::vector<PredictionRow> parse_predictions_tsv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<PredictionRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("flow_id\t", 0) == 0) continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() < 3) throw Error("predictions file: bad row: " + line);
        PredictionRow row;
        row.flow_id = fields[0];
        row.truth = fields[1] == "?" ? TerminalType::Unlabeled : terminal_type_from_name(fields[1]);
        row.predicted = terminal_type_from_name(fields[2]);
        for (size_t i = 3; i < fields.size(); ++i)
            row.probabilities.push_back(parse_double(fields[i]));
        rows.push_back(std::move(row));
    }
    return rows;
}

MetricsReport evaluate_predictions(const std::vector<PredictionRow>& rows,
                                   const std::unordered_map<uint32_t, TerminalType>& label_map,
                                   bool eq_literal_accuracy) {
    std::vector<int> y_true, y_pred;
    for (const PredictionRow& row : rows) {
        TerminalType truth = row.truth;
        if (!label_map.empty()) {
            truth = TerminalType::Unlabeled;
            size_t dash = row.flow_id.find('-');
            if (dash == std::string::npos)
                throw Error("predictions file: bad flow_id: " + row.flow_id);
            for (const std::string& endpoint :
                 {row.flow_id.substr(0, dash), row.flow_id.substr(dash + 1)}) {
                size_t colon = endpoint.rfind(':');
                if (colon == std::string::npos)
                    throw Error("predictions file: bad flow_id: " + row.flow_id);
                auto it = label_map.find(ip_from_string(endpoint.substr(0, colon)));
                if (it != label_map.end()) {
                    truth = it->second;
                    break;
                }
            }
        }
        if (truth == TerminalType::Unlabeled)
            throw MissingLabel("no label for flow " + row.flow_id);
        y_true.push_back(static_cast<int>(truth));
        y_pred.push_back(static_cast<int>(row.predicted));
    }
    return evaluate(y_true, y_pred, kTerminalTypes, eq_literal_accuracy);
}

}  // namespace termrec
