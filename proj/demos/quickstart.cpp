// Clusters a small synthetic two-view dataset end to end, clean and with salt-and-pepper noise.
#include <iostream>

#include <tpch/tpch.hpp>

int main() {
    using namespace tpch;
    const MultiViewData clean = gen_synthetic_gaussian(4, 2, 400, {10, 10}, 8.0, 1);
    const MultiViewData noisy = salt_pepper(clean, 0.1, 7);

    RunConfig cfg;
    cfg.anchors = 100;
    cfg.seed = 1;
    cfg.solver.bits = 16;

    for (const auto *data : {&clean, &noisy}) {
        const RunReport r = run_cluster(*data, cfg);
        const ClusteringScores &s = *r.scores;
        std::cout << (data == &clean ? "clean" : "noisy") << ": iterations " << r.iterations
                  << "  converged " << r.converged << "\n  acc " << s.acc << "  nmi " << s.nmi
                  << "  purity " << s.purity << "  fscore " << s.fscore << "  ari " << s.ari
                  << "\n";
    }
}
