#include <math.h>
#include <stdio.h>
#include <string.h>

#include "revival.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    RevivalState *bell = NULL;
    CHECK(revival_state_bell(&bell) == REVIVAL_STATUS_OK);

    double c = 0.0;
    CHECK(revival_concurrence(bell, &c) == REVIVAL_STATUS_OK);
    CHECK(fabs(c - 1.0) < 1e-12);

    double angles[4], s = 0.0;
    CHECK(revival_chsh_optimize(bell, angles, &s) == REVIVAL_STATUS_OK);
    CHECK(fabs(s - 2.0 * sqrt(2.0)) < 1e-6);

    RevivalState *bad = NULL;
    CHECK(revival_state_maximal(1.5, 0.0, &bad) == REVIVAL_STATUS_NON_PHYSICAL_CHANNEL);
    CHECK(bad == NULL);
    CHECK(strlen(revival_last_error_message()) > 0);

    double a[3] = {0.37, 0.44, 0.19}, l[3] = {778.853, 780.160, 781.459}, w[3] = {0.9, 0.9, 0.9};
    RevivalSpectrum *spec = NULL;
    CHECK(revival_spectrum_new(3, a, l, w, 780.0, &spec) == REVIVAL_STATUS_OK);
    double re = 0.0, im = 0.0;
    CHECK(revival_kernel(spec, 560.0, &re, &im) == REVIVAL_STATUS_OK);
    CHECK(fabs(hypot(re, im) - 0.3416) < 1e-3);

    revival_spectrum_free(spec);
    revival_state_free(bell);
    printf("ok %s\n", revival_version());
    return 0;
}
