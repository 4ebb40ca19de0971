#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "termrec/mlp.hpp"
#include "termrec/tree.hpp"

namespace termrec {

// Classifier input I = x^SE (K+1 presence bits) then standardized x^FF.
std::vector<double> build_classifier_input(const std::vector<uint8_t>& x_se,
                                           const std::vector<double>& x_ff_standardized);

std::vector<std::string> classifier_input_names(size_t k);

enum class ClassifierKind { Gbt, Logistic, RandomForest, AdaBoost, NeuralNet };

ClassifierKind classifier_kind_from_name(const std::string& name);
const char* classifier_kind_name(ClassifierKind kind);

struct GbtConfig {
    size_t stages = 200;
    double learning_rate = 0.1;
    size_t max_depth = 3;
};

// Gradient-boosted trees, multinomial deviance, Friedman MSE splits,
// Newton-style leaf values. One regression tree per class per stage.
struct GbtModel {
    size_t n_classes = 0;
    double learning_rate = 0.1;
    std::vector<double> init_scores;  // per-class log prior
    std::vector<std::vector<RegressionTree>> stages;
    std::vector<double> train_deviance;  // per stage, non-increasing

    Matrix predict_proba(const Matrix& x) const;
};

GbtModel train_gbt(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                   const GbtConfig& cfg);

struct LogisticConfig {
    double l1_penalty = 0.01;
    size_t iterations = 500;
    double learning_rate = 0.1;
};

// Multinomial logistic regression, L1 via proximal (soft-threshold) steps.
struct LogisticModel {
    Matrix w;  // n_classes x dim
    std::vector<double> b;

    Matrix predict_proba(const Matrix& x) const;
};

LogisticModel train_logistic(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                             const LogisticConfig& cfg);

struct ForestConfig {
    size_t trees = 10;
    size_t max_depth = 0;  // 0 = unlimited
    bool bootstrap = true;
    bool feature_subsample = true;  // sqrt(d) per split
    uint64_t seed = 0;
};

struct ForestModel {
    std::vector<ClassificationTree> trees;
    size_t n_classes = 0;

    Matrix predict_proba(const Matrix& x) const;
};

ForestModel train_random_forest(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                                const ForestConfig& cfg);

struct AdaBoostConfig {
    size_t stages = 100;
    double learning_rate = 1.0;
    uint64_t seed = 0;
};

// SAMME with depth-1 Gini stumps.
struct AdaBoostModel {
    std::vector<ClassificationTree> stumps;
    std::vector<double> alphas;
    size_t n_classes = 0;

    Matrix predict_proba(const Matrix& x) const;
};

AdaBoostModel train_adaboost(const Matrix& x, const std::vector<int>& y, size_t n_classes,
                             const AdaBoostConfig& cfg);

struct NeuralNetConfig {
    std::vector<size_t> hidden = {64, 16};
    TrainConfig train;
};

// One trained model of any kind behind a common predict surface.
struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::Gbt;
    size_t n_classes = 0;
    GbtModel gbt;
    LogisticModel logistic;
    ForestModel forest;
    AdaBoostModel adaboost;
    MlpNetwork nn;

    Matrix predict_proba(const Matrix& x) const;
    std::vector<int> predict(const Matrix& x) const;  // argmax, ties to lowest index
};

struct MetricsReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    std::vector<size_t> tp, fp, fn;
    Matrix confusion;  // rows = true class, cols = predicted

    std::string to_text(const std::vector<std::string>& class_names) const;
    std::string confusion_tsv(const std::vector<std::string>& class_names) const;
};

// Macro precision/recall are unweighted class means; macro F1 is the harmonic
// mean of the macro aggregates. Zero-denominator classes contribute 0.
// eq_literal_accuracy divides by sum(tp+fp+fn) instead of the sample count.
MetricsReport evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                       size_t n_classes, bool eq_literal_accuracy = false);

}  // namespace termrec
