#include "stratify/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <random>

#include "stratify/error.hpp"

namespace stratify {

void write_synthetic_frame(std::ostream& out, const SyntheticSpec& spec) {
    if (spec.domains < 1 || spec.rows < spec.domains)
        throw Error(ErrorKind::InvalidArgs, "synthetic frame needs rows >= domains >= 1");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // Regions differ in size, urbanisation and how mountainous they are.
    std::vector<double> region_weight(static_cast<std::size_t>(spec.domains));
    std::vector<double> urban(region_weight.size()), alpine(region_weight.size());
    for (std::size_t d = 0; d < region_weight.size(); ++d) {
        region_weight[d] = 0.5 + u(rng);
        urban[d] = 0.6 * z(rng);
        alpine[d] = u(rng);
    }
    std::discrete_distribution<std::size_t> region(region_weight.begin(), region_weight.end());

    out << "COM,REGION,POP0019,POP2039,POP4064,POP65P,POPTOT,WOOD,AGRI,PASTURE,BUILT,INDUS\n";
    out.precision(10);
    constexpr std::array<double, 4> base_share{0.23, 0.29, 0.32, 0.16};
    for (int i = 0; i < spec.rows; ++i) {
        // First rows seed every region so none is empty.
        const std::size_t d = i < spec.domains ? static_cast<std::size_t>(i) : region(rng);
        const double log_pop = 6.9 + urban[d] + 1.25 * z(rng);
        const double pop = std::max(20.0, std::round(std::exp(log_pop)));

        std::array<double, 4> share{};
        double share_sum = 0.0;
        const double age_tilt = 0.15 * z(rng) + 0.1 * alpine[d];
        for (std::size_t g = 0; g < 4; ++g) {
            share[g] = base_share[g] * std::exp(0.12 * z(rng) + age_tilt * (static_cast<double>(g) - 1.5) / 1.5);
            share_sum += share[g];
        }
        std::array<double, 4> counts{};
        double assigned = 0.0;
        for (std::size_t g = 0; g < 3; ++g) {
            counts[g] = std::round(pop * share[g] / share_sum);
            assigned += counts[g];
        }
        counts[3] = std::max(0.0, pop - assigned);

        const double area = std::exp(6.3 + 0.35 * (log_pop - 6.9) + 0.65 * z(rng) + 0.8 * alpine[d]);
        const double wood = area * std::clamp(0.30 + 0.12 * z(rng) + 0.1 * alpine[d], 0.01, 0.9);
        const double agri = area * std::clamp(0.38 + 0.15 * z(rng) - 0.25 * alpine[d], 0.0, 0.9);
        const double pasture = area * std::clamp(0.05 + 0.25 * alpine[d] * u(rng) + 0.05 * z(rng), 0.0, 0.8);
        const double built = std::exp(-1.2 + 0.85 * log_pop + 0.35 * z(rng));
        const double indus = std::exp(-3.0 + 0.95 * log_pop + 0.8 * z(rng));

        out << "M" << (i + 1) << ',' << (d + 1);
        for (double c : counts) out << ',' << c;
        out << ',' << pop << ',' << std::round(wood) << ',' << std::round(agri) << ',' << std::round(pasture) << ','
            << std::round(built) << ',' << std::round(indus) << '\n';
    }
}

}  // namespace stratify
