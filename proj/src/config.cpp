#include "termrec/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "termrec/pcap.hpp"
#include "termrec/rng.hpp"

namespace termrec {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + section + "." + it.key() + "'");
}

template <typename T>
void get(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_train_config(const json& obj, const std::string& section, TrainConfig& cfg) {
    check_keys(obj, section,
               {"epochs", "batch_size", "learning_rate", "seed", "early_stop_patience", "tolerance"});
    get(obj, "epochs", cfg.epochs);
    get(obj, "batch_size", cfg.batch_size);
    get(obj, "learning_rate", cfg.learning_rate);
    get(obj, "seed", cfg.seed);
    get(obj, "early_stop_patience", cfg.early_stop_patience);
    get(obj, "tolerance", cfg.tolerance);
    if (cfg.epochs == 0 || cfg.batch_size == 0 || cfg.learning_rate <= 0 || cfg.tolerance <= 0)
        throw ConfigError(section + ": epochs, batch_size, learning_rate, tolerance must be positive");
}

json train_config_json(const TrainConfig& cfg) {
    return json{{"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"learning_rate", cfg.learning_rate},
                {"seed", cfg.seed},
                {"early_stop_patience", cfg.early_stop_patience},
                {"tolerance", cfg.tolerance}};
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse failed: ") + e.what());
    }
    PipelineConfig cfg;
    check_keys(root, "<root>",
               {"seed", "threads", "flow_features_only", "eq_literal_accuracy", "segmentation",
                "flow_filter", "split", "autoencoder", "clustering", "classifier", "generator",
                "behavior_table_file"});
    get(root, "seed", cfg.seed);
    get(root, "threads", cfg.threads);
    get(root, "flow_features_only", cfg.flow_features_only);
    get(root, "eq_literal_accuracy", cfg.eq_literal_accuracy);
    get(root, "behavior_table_file", cfg.behavior_table_file);

    if (root.contains("segmentation")) {
        const json& s = root["segmentation"];
        check_keys(s, "segmentation", {"tau_seconds", "segment_count"});
        get(s, "tau_seconds", cfg.segmentation.tau);
        get(s, "segment_count", cfg.segmentation.count);
        if (cfg.segmentation.tau <= 0 || cfg.segmentation.count == 0)
            throw ConfigError("segmentation: tau_seconds must be > 0 and segment_count >= 1");
    }
    if (root.contains("flow_filter")) {
        const json& s = root["flow_filter"];
        check_keys(s, "flow_filter", {"min_duration_seconds"});
        get(s, "min_duration_seconds", cfg.flow_filter.min_duration);
    }
    if (root.contains("split")) {
        const json& s = root["split"];
        check_keys(s, "split", {"train", "validation", "test", "seed"});
        get(s, "train", cfg.split.train);
        get(s, "validation", cfg.split.validation);
        get(s, "test", cfg.split.test);
        get(s, "seed", cfg.split.seed);
        double sum = cfg.split.train + cfg.split.validation + cfg.split.test;
        if (cfg.split.train <= 0 || cfg.split.validation < 0 || cfg.split.test < 0 ||
            std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("split: ratios must be positive and sum to 1");
    }
    if (root.contains("autoencoder")) {
        const json& s = root["autoencoder"];
        check_keys(s, "autoencoder",
                   {"hidden", "epochs", "batch_size", "learning_rate", "seed",
                    "early_stop_patience", "tolerance"});
        get(s, "hidden", cfg.autoencoder.hidden);
        if (cfg.autoencoder.hidden.empty())
            throw ConfigError("autoencoder: hidden layers must not be empty");
        json t = s;
        t.erase("hidden");
        parse_train_config(t, "autoencoder", cfg.autoencoder.train);
    }
    if (root.contains("clustering")) {
        const json& s = root["clustering"];
        check_keys(s, "clustering",
                   {"kind", "clusters", "max_iterations", "tolerance", "em_iterations", "seed"});
        if (s.contains("kind")) {
            std::string kind = s["kind"].get<std::string>();
            if (kind == "kmeans")
                cfg.clustering.kind = ClusterKind::KMeans;
            else if (kind == "gmm")
                cfg.clustering.kind = ClusterKind::Gmm;
            else
                throw ConfigError("clustering.kind must be 'kmeans' or 'gmm'");
        }
        get(s, "clusters", cfg.clustering.clusters);
        get(s, "max_iterations", cfg.clustering.max_iterations);
        get(s, "tolerance", cfg.clustering.tolerance);
        get(s, "em_iterations", cfg.clustering.em_iterations);
        get(s, "seed", cfg.clustering.seed);
        if (cfg.clustering.clusters == 0) throw ConfigError("clustering: clusters must be >= 1");
    }
    if (root.contains("classifier")) {
        const json& s = root["classifier"];
        check_keys(s, "classifier",
                   {"kind", "seed", "gbt", "logistic", "random_forest", "adaboost", "neural_net"});
        if (s.contains("kind"))
            cfg.classifier.kind = classifier_kind_from_name(s["kind"].get<std::string>());
        get(s, "seed", cfg.classifier.seed);
        if (s.contains("gbt")) {
            const json& g = s["gbt"];
            check_keys(g, "classifier.gbt", {"stages", "learning_rate", "max_depth"});
            get(g, "stages", cfg.classifier.gbt.stages);
            get(g, "learning_rate", cfg.classifier.gbt.learning_rate);
            get(g, "max_depth", cfg.classifier.gbt.max_depth);
        }
        if (s.contains("logistic")) {
            const json& g = s["logistic"];
            check_keys(g, "classifier.logistic", {"l1_penalty", "iterations", "learning_rate"});
            get(g, "l1_penalty", cfg.classifier.logistic.l1_penalty);
            get(g, "iterations", cfg.classifier.logistic.iterations);
            get(g, "learning_rate", cfg.classifier.logistic.learning_rate);
        }
        if (s.contains("random_forest")) {
            const json& g = s["random_forest"];
            check_keys(g, "classifier.random_forest",
                       {"trees", "max_depth", "bootstrap", "feature_subsample"});
            get(g, "trees", cfg.classifier.forest.trees);
            get(g, "max_depth", cfg.classifier.forest.max_depth);
            get(g, "bootstrap", cfg.classifier.forest.bootstrap);
            get(g, "feature_subsample", cfg.classifier.forest.feature_subsample);
        }
        if (s.contains("adaboost")) {
            const json& g = s["adaboost"];
            check_keys(g, "classifier.adaboost", {"stages", "learning_rate"});
            get(g, "stages", cfg.classifier.adaboost.stages);
            get(g, "learning_rate", cfg.classifier.adaboost.learning_rate);
        }
        if (s.contains("neural_net")) {
            const json& g = s["neural_net"];
            check_keys(g, "classifier.neural_net",
                       {"hidden", "epochs", "batch_size", "learning_rate", "seed",
                        "early_stop_patience", "tolerance"});
            get(g, "hidden", cfg.classifier.neural_net.hidden);
            json t = g;
            t.erase("hidden");
            parse_train_config(t, "classifier.neural_net", cfg.classifier.neural_net.train);
        }
    }
    if (root.contains("generator")) {
        const json& s = root["generator"];
        check_keys(s, "generator",
                   {"seed", "flows_per_class", "capture_duration_seconds", "long_fraction",
                    "hard_mode", "capture_start"});
        get(s, "seed", cfg.generator.seed);
        get(s, "flows_per_class", cfg.generator.flows_per_class);
        get(s, "capture_duration_seconds", cfg.generator.capture_duration);
        get(s, "long_fraction", cfg.generator.long_fraction);
        get(s, "hard_mode", cfg.generator.hard_mode);
        get(s, "capture_start", cfg.generator.capture_start);
    }
    // The generator shares the segmentation grid.
    cfg.generator.tau = cfg.segmentation.tau;
    cfg.generator.segments = cfg.segmentation.count;

    if (!cfg.behavior_table_file.empty()) {
        std::ifstream in(cfg.behavior_table_file);
        if (!in) throw ConfigError("cannot open behavior table file: " + cfg.behavior_table_file);
        std::stringstream buf;
        buf << in.rdbuf();
        cfg.behavior_table = BehaviorCodeTable::parse(buf.str());
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string PipelineConfig::to_json_text() const {
    json root;
    root["seed"] = seed;
    root["threads"] = threads;
    root["flow_features_only"] = flow_features_only;
    root["eq_literal_accuracy"] = eq_literal_accuracy;
    root["behavior_table_file"] = behavior_table_file;
    root["segmentation"] = {{"tau_seconds", segmentation.tau}, {"segment_count", segmentation.count}};
    root["flow_filter"] = {{"min_duration_seconds", flow_filter.min_duration}};
    root["split"] = {{"train", split.train},
                     {"validation", split.validation},
                     {"test", split.test},
                     {"seed", split.seed}};
    json ae = train_config_json(autoencoder.train);
    ae["hidden"] = autoencoder.hidden;
    root["autoencoder"] = ae;
    root["clustering"] = {{"kind", clustering.kind == ClusterKind::KMeans ? "kmeans" : "gmm"},
                          {"clusters", clustering.clusters},
                          {"max_iterations", clustering.max_iterations},
                          {"tolerance", clustering.tolerance},
                          {"em_iterations", clustering.em_iterations},
                          {"seed", clustering.seed}};
    json nn = train_config_json(classifier.neural_net.train);
    nn["hidden"] = classifier.neural_net.hidden;
    root["classifier"] = {
        {"kind", classifier_kind_name(classifier.kind)},
        {"seed", classifier.seed},
        {"gbt",
         {{"stages", classifier.gbt.stages},
          {"learning_rate", classifier.gbt.learning_rate},
          {"max_depth", classifier.gbt.max_depth}}},
        {"logistic",
         {{"l1_penalty", classifier.logistic.l1_penalty},
          {"iterations", classifier.logistic.iterations},
          {"learning_rate", classifier.logistic.learning_rate}}},
        {"random_forest",
         {{"trees", classifier.forest.trees},
          {"max_depth", classifier.forest.max_depth},
          {"bootstrap", classifier.forest.bootstrap},
          {"feature_subsample", classifier.forest.feature_subsample}}},
        {"adaboost",
         {{"stages", classifier.adaboost.stages},
          {"learning_rate", classifier.adaboost.learning_rate}}},
        {"neural_net", nn}};
    root["generator"] = {{"seed", generator.seed},
                         {"flows_per_class", generator.flows_per_class},
                         {"capture_duration_seconds", generator.capture_duration},
                         {"long_fraction", generator.long_fraction},
                         {"hard_mode", generator.hard_mode},
                         {"capture_start", generator.capture_start}};
    return root.dump(2);
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t PipelineConfig::hash() const { return fnv1a64(to_json_text()); }

std::string PipelineConfig::hash_hex() const {
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::string PipelineConfig::header_comment() const {
    return "# config_hash=" + hash_hex() + "\n";
}

void PipelineConfig::apply_master_seed(uint64_t master) {
    seed = master;
    uint64_t sm = master;
    split.seed = splitmix64(sm);
    autoencoder.train.seed = splitmix64(sm);
    clustering.seed = splitmix64(sm);
    classifier.seed = splitmix64(sm);
    classifier.forest.seed = splitmix64(sm);
    classifier.adaboost.seed = splitmix64(sm);
    classifier.neural_net.train.seed = splitmix64(sm);
    generator.seed = splitmix64(sm);
}

}  // namespace termrec
