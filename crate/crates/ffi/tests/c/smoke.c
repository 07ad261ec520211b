#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "wgqed.h"

#define CHECK(call)                                                      \
    do {                                                                 \
        WgqedStatus s_ = (call);                                         \
        if (s_ != WGQED_STATUS_OK) {                                     \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,           \
                    wgqed_last_error());                                 \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    WgqedModel *model = NULL;
    WgqedState *state = NULL;
    WgqedTrace *trace = NULL;
    WgqedMarkov markov;
    WgqedRateFit fit;

    CHECK(wgqed_model_new(0.0, 0.0, 1.0, 0.3, 400, &model));
    CHECK(wgqed_model_golden_rule(model, &markov));
    if (fabs(markov.gamma_r - 0.045) > 1e-12) return 2;

    CHECK(wgqed_state_bare(model, &state));
    WgqedEvolutionConfig cfg = wgqed_evolution_config_default();
    cfg.t_max = 80.0;
    CHECK(wgqed_evolve(state, model, &cfg, &trace));

    size_t n = wgqed_trace_len(trace);
    double *surv = malloc(n * sizeof *surv);
    CHECK(wgqed_trace_survival(trace, surv, n));
    CHECK(wgqed_trace_fit_rate(trace, 5.0, 60.0, &fit));
    printf("%zu %.6f %.6f\n", n, surv[n - 1], fit.rate_amplitude);
    if (fabs(fit.rate_amplitude - 0.045) > 0.03 * 0.045) return 3;

    if (wgqed_trace_survival(trace, surv, n - 1) != WGQED_STATUS_BUFFER_TOO_SMALL) return 4;
    if (wgqed_model_new(0.0, 0.0, -1.0, 0.3, 10, &model) != WGQED_STATUS_INVALID_ARGUMENT) return 5;

    free(surv);
    wgqed_trace_free(trace);
    wgqed_state_free(state);
    wgqed_model_free(model);
    return 0;
}
