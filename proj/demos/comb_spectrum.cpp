// Comb structure of a small standard and sine-modulated train.

#include <comblambda/comblambda.hpp>

#include <cstdio>

int main()
{
    using namespace comblambda;
    for (auto kind : {modulation_kind::none, modulation_kind::sine}) {
        const PulseTrainConfig cfg = surrogate_train(kind, 32);
        const CombAnalysis a = analyze_comb(cfg, comb_sample_rate(cfg));
        std::printf("== %s\n%sfwhm=%.6g\n", to_string(kind), a.report.to_text().c_str(), a.fwhm);
    }
}
