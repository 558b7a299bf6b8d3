#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "tspm/tspm.hpp"

int main(int argc, char** argv) {
    CLI::App app{"time-series pattern mining and classification pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    const char* names[] = {"synth", "preprocess", "mine", "train", "eval",
                           "ablate", "sweep", "pca"};
    const char* blurbs[] = {"generate a synthetic dataset to disk",
                            "emit temporally and spatially normalized instance files",
                            "mine and rank temporal patterns from the training split",
                            "train a one-vs-rest linear model, emit the model file",
                            "train and evaluate, emit metrics and confusion matrix",
                            "rerun the flat SVM with channel groups removed",
                            "coordinate-ascent search over mining hyperparameters",
                            "project the feature space onto principal components"};
    for (std::size_t i = 0; i < std::size(names); ++i) {
        auto* sub = app.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--config", config_path, "experiment config file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return tspm::run(app.get_subcommands().front()->get_name(), config_path, out_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
