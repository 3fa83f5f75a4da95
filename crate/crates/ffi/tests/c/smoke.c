#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "driftrate.h"

static const char *CONFIG =
    "[model]\n"
    "domain = [1.0]\n"
    "cost = [{ kind = \"constant\", value = 0.0 }]\n"
    "[params]\n"
    "sigma2 = 1.0\n"
    "b = 1.0\n";

#define CHECK(call)                                                              \
    do {                                                                         \
        DrStatus st = (call);                                                    \
        if (st != DR_STATUS_OK) {                                                \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)st,              \
                    dr_last_error_message());                                    \
            return 1;                                                            \
        }                                                                        \
    } while (0)

int main(void) {
    DrModel *model = NULL;
    DrSolution *sol = NULL;
    DrSummary sum;
    CHECK(dr_model_from_toml(CONFIG, &model));
    CHECK(dr_solve(model, 1.0, 1.0, 2.0, 0, &sol));
    CHECK(dr_solution_summary(sol, &sum));

    double *theta = malloc(sum.n_z * sizeof(double));
    CHECK(dr_solution_grid(sol, NULL, NULL, NULL, theta, sum.n_z));
    int ok = fabs(sum.gamma - 2.0 / (exp(2.0) - 1.0)) < 1e-10 && theta[0] == 1.0;
    free(theta);

    if (dr_solve(model, 1.0, 1.0, -1.0, 0, &sol) != DR_STATUS_INVALID_ARGUMENT) {
        ok = 0;
    }
    dr_solution_free(sol);
    dr_model_free(model);
    printf("gamma=%.15f beta=%.15f %s\n", sum.gamma, sum.beta, ok ? "ok" : "MISMATCH");
    return ok ? 0 : 1;
}
