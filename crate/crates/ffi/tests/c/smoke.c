#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ris.h"

#define CHECK(expr)                                                            \
    do {                                                                       \
        if (!(expr)) {                                                         \
            const char *e = ris_last_error();                                  \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #expr,     \
                    e ? e : "no error");                                       \
            return 1;                                                          \
        }                                                                      \
    } while (0)

int main(void) {
    RisSimulator *sim = NULL;
    CHECK(ris_simulator_new_default(&sim) == RIS_STATUS_OK);
    size_t n = ris_simulator_harmonics(sim);
    size_t k = ris_simulator_grid_len(sim);
    CHECK(n == 25 && k == 81);

    double w[25] = {0};
    double p[81];
    CHECK(ris_simulator_pattern(sim, w, n, p, k) == RIS_STATUS_OK);

    double beam = 0.0, slnr = 0.0;
    CHECK(ris_simulator_slnr(sim, w, n, &beam, 1, NULL, 0, &slnr) == RIS_STATUS_OK);
    CHECK(slnr == p[40]);

    w[0] = 50.0;
    CHECK(ris_simulator_pattern(sim, w, n, p, k) == RIS_STATUS_REJECTED_CONFIGURATION);
    CHECK(ris_last_error() != NULL && strlen(ris_last_error()) > 0);
    CHECK(ris_simulator_pattern(NULL, w, n, p, k) == RIS_STATUS_NULL_POINTER);

    ris_simulator_free(sim);
    printf("ok %s\n", ris_version());
    return 0;
}
