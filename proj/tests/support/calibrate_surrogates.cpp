// Difficulty sweep: mean AUC of the default uni-bi SVM (method 5) on the
// low-prevalence Cohen surrogates for a range of focus-topic signals.
#include "screenkit/stats.hpp"
#include "synth.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>

using namespace screenkit;

int main(int argc, char** argv) {
    CLI::App app{"surrogate difficulty calibration"};
    std::vector<double> signals{0.08, 0.10, 0.12, 0.15, 0.20};
    std::size_t reps = 5;
    app.add_option("--signal", signals)->capture_default_str();
    app.add_option("--reps", reps)->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    const std::vector<MethodSpec> methods{find_method(5)};
    for (double signal : signals) {
        std::vector<std::unique_ptr<FeatureContext>> contexts;
        std::vector<const FeatureContext*> low;
        for (const auto& row : synth::cohen_rows()) {
            auto corpus = synth::cohen_corpus(row, std::nullopt, 1, signal);
            if (prevalence(corpus).group != PrevalenceGroup::Low) {
                continue;
            }
            contexts.push_back(std::make_unique<FeatureContext>(std::move(corpus), SkipGramOptions{}));
            low.push_back(contexts.back().get());
        }
        GridOptions g;
        g.repetitions = reps;
        const auto grid = run_experiment_grid(low, methods, g).grid;
        double sum = 0.0;
        for (const auto& d : grid.datasets()) {
            sum += grid.mean(d, 5, Metric::Auc).value_or(0.0);
        }
        std::cout << "signal " << signal << ": method 5 mean AUC " << sum / static_cast<double>(low.size()) << '\n';
    }
    return 0;
}
