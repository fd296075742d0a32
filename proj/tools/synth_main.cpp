#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "stratify/error.hpp"
#include "stratify/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write a municipality-shaped synthetic frame"};
    stratify::SyntheticSpec spec;
    std::string out_path;
    app.add_option("--rows", spec.rows, "Number of records");
    app.add_option("--domains", spec.domains, "Number of regions");
    app.add_option("--seed", spec.seed, "Generator seed");
    app.add_option("-o,--out", out_path, "Output CSV (stdout when omitted)");
    CLI11_PARSE(app, argc, argv);

    try {
        if (out_path.empty()) {
            stratify::write_synthetic_frame(std::cout, spec);
        } else {
            std::ofstream out(out_path);
            if (!out) throw stratify::Error(stratify::ErrorKind::Io, "cannot write " + out_path);
            stratify::write_synthetic_frame(out, spec);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
