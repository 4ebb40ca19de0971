#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "termrec/classifier.hpp"
#include "termrec/features.hpp"
#include "termrec/rng.hpp"

using namespace termrec;

namespace {

// Three noisy but separable 2-d classes.
void toy_3class(Matrix& x, std::vector<int>& y, size_t per_class, uint64_t seed) {
    Rng rng(seed);
    double centers[3][2] = {{0, 0}, {6, 0}, {0, 6}};
    x = Matrix(0, 0);
    y.clear();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < per_class; ++i) {
            double row[2] = {centers[c][0] + rng.normal(0, 0.8),
                             centers[c][1] + rng.normal(0, 0.8)};
            x.append_row(row, 2);
            y.push_back(c);
        }
}

double training_accuracy(const ClassifierModel& model, const Matrix& x,
                         const std::vector<int>& y) {
    auto pred = model.predict(x);
    size_t ok = 0;
    for (size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++ok;
    return static_cast<double>(ok) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("classifier input is x_se then standardized x_ff") {
    std::vector<uint8_t> se(16, 0);
    se[2] = 1;
    se[15] = 1;
    std::vector<double> ff(16, 0.5);
    auto in = build_classifier_input(se, ff);
    REQUIRE(in.size() == 32);
    CHECK(in[2] == 1.0);
    CHECK(in[15] == 1.0);
    CHECK(in[16] == 0.5);
    CHECK_THROWS_AS(build_classifier_input(se, std::vector<double>(15, 0.0)), DimensionMismatch);

    auto names = classifier_input_names(15);
    REQUIRE(names.size() == 32);
    CHECK(names[0] == "cluster_0");
    CHECK(names[15] == "empty_segment");
    CHECK(names[16] == "packet_count_send");
}

TEST_CASE("regression tree fits simple step data exactly") {
    Matrix x(6, 1);
    std::vector<double> t;
    for (size_t i = 0; i < 6; ++i) {
        x.at(i, 0) = static_cast<double>(i);
        t.push_back(i < 3 ? -1.0 : 2.0);
    }
    RegressionTree tree;
    tree.fit(x, t, 3);
    for (size_t i = 0; i < 6; ++i)
        CHECK(tree.predict(x.row(i)) == doctest::Approx(t[i]));
}

TEST_CASE("gbt deviance is non-increasing and the toy set is learned") {
    Matrix x;
    std::vector<int> y;
    toy_3class(x, y, 15, 7);
    GbtConfig cfg;
    cfg.stages = 50;
    auto model = train_gbt(x, y, 3, cfg);
    REQUIRE(model.train_deviance.size() == 50);
    for (size_t i = 1; i < model.train_deviance.size(); ++i)
        CHECK(model.train_deviance[i] <= model.train_deviance[i - 1] + 1e-9);

    auto proba = model.predict_proba(x);
    for (size_t r = 0; r < proba.rows(); ++r) {
        double s = 0;
        for (size_t c = 0; c < 3; ++c) s += proba.at(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    ClassifierModel cm;
    cm.kind = ClassifierKind::Gbt;
    cm.n_classes = 3;
    cm.gbt = model;
    CHECK(training_accuracy(cm, x, y) == 1.0);
}

TEST_CASE("gbt input validation") {
    Matrix x(4, 2, 0.0);
    GbtConfig cfg;
    CHECK_THROWS_AS(train_gbt(Matrix(0, 0), {}, 3, cfg), EmptyInput);
    CHECK_THROWS_AS(train_gbt(x, {0, 0, 0}, 3, cfg), LengthMismatch);
    CHECK_THROWS_AS(train_gbt(x, {0, 0, 0, 0}, 3, cfg), SingleClass);
    CHECK_THROWS_AS(train_gbt(x, {0, 0, 0, 3}, 3, cfg), IndexOutOfRange);
}

TEST_CASE("logistic regression separates a 2-class toy set without penalty") {
    Matrix x(20, 2);
    std::vector<int> y;
    for (size_t i = 0; i < 20; ++i) {
        double side = i < 10 ? -1.0 : 1.0;
        x.at(i, 0) = side * (2.0 + 0.05 * static_cast<double>(i % 10));
        x.at(i, 1) = 0.3 * side;
        y.push_back(i < 10 ? 0 : 1);
    }
    LogisticConfig cfg;
    cfg.l1_penalty = 0.0;
    cfg.iterations = 800;
    auto model = train_logistic(x, y, 2, cfg);
    ClassifierModel cm;
    cm.kind = ClassifierKind::Logistic;
    cm.n_classes = 2;
    cm.logistic = model;
    CHECK(training_accuracy(cm, x, y) == 1.0);
}

TEST_CASE("l1 penalty shrinks weights toward zero") {
    Matrix x;
    std::vector<int> y;
    toy_3class(x, y, 20, 13);
    LogisticConfig weak, strong;
    weak.l1_penalty = 0.0;
    strong.l1_penalty = 1.0;
    auto mw = train_logistic(x, y, 3, weak);
    auto ms = train_logistic(x, y, 3, strong);
    double nw = 0, ns = 0;
    for (double v : mw.w.data()) nw += std::abs(v);
    for (double v : ms.w.data()) ns += std::abs(v);
    CHECK(ns < nw);
}

TEST_CASE("single-tree forest without randomness equals a plain decision tree") {
    Matrix x;
    std::vector<int> y;
    toy_3class(x, y, 10, 23);
    ForestConfig cfg;
    cfg.trees = 1;
    cfg.bootstrap = false;
    cfg.feature_subsample = false;
    cfg.seed = 1;
    auto forest = train_random_forest(x, y, 3, cfg);

    ClassificationTree tree;
    Rng rng(1);
    tree.fit(x, y, std::vector<double>(y.size(), 1.0), 3, 0, 0, rng);
    for (size_t r = 0; r < x.rows(); ++r)
        CHECK(forest.trees[0].predict(x.row(r)) == tree.predict(x.row(r)));
}

TEST_CASE("forest learns the toy set and emits proper probabilities") {
    Matrix x;
    std::vector<int> y;
    toy_3class(x, y, 20, 29);
    ForestConfig cfg;
    cfg.seed = 5;
    auto model = train_random_forest(x, y, 3, cfg);
    auto proba = model.predict_proba(x);
    size_t ok = 0;
    for (size_t r = 0; r < x.rows(); ++r) {
        double s = 0;
        size_t best = 0;
        for (size_t c = 0; c < 3; ++c) {
            s += proba.at(r, c);
            if (proba.at(r, c) > proba.at(r, best)) best = c;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        if (static_cast<int>(best) == y[r]) ++ok;
    }
    CHECK(static_cast<double>(ok) / static_cast<double>(y.size()) >= 0.95);
}

TEST_CASE("adaboost stage weights are positive while stumps beat chance") {
    Matrix x;
    std::vector<int> y;
    toy_3class(x, y, 20, 31);
    AdaBoostConfig cfg;
    cfg.stages = 30;
    cfg.seed = 3;
    auto model = train_adaboost(x, y, 3, cfg);
    REQUIRE_FALSE(model.alphas.empty());
    for (double a : model.alphas) {
        CHECK(std::isfinite(a));
        CHECK(a > 0.0);
    }
    ClassifierModel cm;
    cm.kind = ClassifierKind::AdaBoost;
    cm.n_classes = 3;
    cm.adaboost = model;
    CHECK(training_accuracy(cm, x, y) >= 0.9);
}

TEST_CASE("predictions are deterministic pure functions") {
    Matrix x;
    std::vector<int> y;
    toy_3class(x, y, 12, 37);
    GbtConfig cfg;
    cfg.stages = 20;
    auto model = train_gbt(x, y, 3, cfg);
    CHECK(model.predict_proba(x) == model.predict_proba(x));
}

TEST_CASE("metrics: perfect, worked example, and all-wrong") {
    auto perfect = evaluate({0, 1, 2, 0}, {0, 1, 2, 0}, 3);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision_macro == 1.0);
    CHECK(perfect.recall_macro == 1.0);
    CHECK(perfect.f1_macro == 1.0);

    // y_true=[A,A,B,B], y_pred=[A,B,B,B]
    auto m = evaluate({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    CHECK(m.accuracy == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.precision_macro == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(m.recall_macro == doctest::Approx(3.0 / 4.0).epsilon(1e-12));
    CHECK(m.f1_macro == doctest::Approx(15.0 / 19.0).epsilon(1e-12));
    CHECK(m.confusion.at(0, 0) == 1.0);
    CHECK(m.confusion.at(0, 1) == 1.0);
    CHECK(m.confusion.at(1, 1) == 2.0);

    auto wrong = evaluate({0, 1}, {1, 0}, 2);
    CHECK(wrong.accuracy == 0.0);
    CHECK(wrong.precision_macro == 0.0);
    CHECK(wrong.recall_macro == 0.0);
    CHECK(wrong.f1_macro == 0.0);
}

TEST_CASE("metrics match a brute-force oracle on random pairs") {
    Rng rng(12345);
    for (int trial = 0; trial < 25; ++trial) {
        size_t n = 40;
        size_t k = 3;
        std::vector<int> yt, yp;
        for (size_t i = 0; i < n; ++i) {
            yt.push_back(static_cast<int>(rng.uniform_int(k)));
            yp.push_back(static_cast<int>(rng.uniform_int(k)));
        }
        auto m = evaluate(yt, yp, k);

        std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0);
        size_t correct = 0;
        for (size_t i = 0; i < n; ++i) {
            if (yt[i] == yp[i]) {
                ++correct;
                tp[static_cast<size_t>(yt[i])] += 1;
            } else {
                fp[static_cast<size_t>(yp[i])] += 1;
                fn[static_cast<size_t>(yt[i])] += 1;
            }
        }
        double p = 0, r = 0;
        for (size_t c = 0; c < k; ++c) {
            p += tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
            r += tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
        }
        p /= static_cast<double>(k);
        r /= static_cast<double>(k);
        double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        CHECK(std::abs(m.accuracy - static_cast<double>(correct) / static_cast<double>(n)) < 1e-12);
        CHECK(std::abs(m.precision_macro - p) < 1e-12);
        CHECK(std::abs(m.recall_macro - r) < 1e-12);
        CHECK(std::abs(m.f1_macro - f1) < 1e-12);
    }
}

TEST_CASE("metrics error contracts and eq-literal accuracy variant") {
    CHECK_THROWS_AS(evaluate({}, {}, 3), EmptyInput);
    CHECK_THROWS_AS(evaluate({0, 1}, {0}, 3), LengthMismatch);

    // tp=3, fp=fn=1 each: standard 3/4, literal 3/(3+1+1) = 3/5.
    auto lit = evaluate({0, 0, 0, 1}, {0, 0, 0, 0}, 2, true);
    CHECK(lit.accuracy == doctest::Approx(0.6).epsilon(1e-12));
    auto std_acc = evaluate({0, 0, 0, 1}, {0, 0, 0, 0}, 2, false);
    CHECK(std_acc.accuracy == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("report text carries the four metrics and the confusion matrix") {
    auto m = evaluate({0, 1, 2}, {0, 1, 1}, 3);
    std::vector<std::string> names{"LVRC", "TTU", "LMT"};
    auto text = m.to_text(names);
    CHECK(text.find("accuracy") != std::string::npos);
    CHECK(text.find("precision_macro") != std::string::npos);
    CHECK(text.find("recall_macro") != std::string::npos);
    CHECK(text.find("f1_macro") != std::string::npos);
    auto tsv = m.confusion_tsv(names);
    CHECK(tsv.find("LVRC") != std::string::npos);
}
