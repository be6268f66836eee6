// Builds a situation pool file from a corpus file and a response file.

#include <iostream>

#include <CLI11.hpp>

#include "crseval/error.hpp"
#include "crseval/ingestion.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Build the situation pool consumed by crseval-server"};
    std::string corpus_path, responses_path, output_path;
    int systems = 0;
    std::size_t sample = 0;
    std::uint64_t seed = 0;
    app.add_option("--corpus", corpus_path, "Dialog corpus (one JSON dialog per line)")->required();
    app.add_option("--responses", responses_path, "Response file (one JSON entry per line)")->required();
    app.add_option("--output", output_path, "Pool file to write")->required();
    app.add_option("--systems", systems, "Required responses per situation (0: any)");
    app.add_option("--sample", sample, "Keep a random subset of this many situations (0: all)");
    app.add_option("--seed", seed, "Seed for --sample");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto corpus = crseval::load_dialog_corpus(corpus_path);
        const auto responses = crseval::load_response_set(responses_path);
        crseval::PoolOptions options;
        if (systems > 0) options.systems_per_situation = systems;
        if (sample > 0) options.sample_size = sample;
        const auto pool = crseval::build_situation_pool(corpus, responses, seed, options);
        crseval::save_pool(pool, output_path);
        std::cout << "wrote " << pool.size() << " situations from " << corpus.dialogs.size()
                  << " dialogs to " << output_path << "\n";
    } catch (const crseval::Error& e) {
        std::cerr << "error [" << crseval::to_string(e.code()) << "]: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
