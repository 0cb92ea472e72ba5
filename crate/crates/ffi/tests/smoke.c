#include <math.h>
#include <stdio.h>
#include <string.h>

#include "o2lyap.h"

static double restoring(double u, double q, void *data) {
    (void)q;
    return -(*(double *)data) * u;
}

static double zero_q(double u, double q, void *data) {
    (void)u;
    (void)q;
    (void)data;
    return 0.0;
}

int main(void) {
    O2Nonlinearity *nl = NULL;
    O2Lagrangian *l = NULL;
    double k = 2.0, value = 0.0;

    if (o2_nonlinearity_from_callbacks(restoring, zero_q, &k, &nl) != O2_STATUS_OK) return 1;
    if (o2_lagrangian_new(nl, O2_LAGRANGIAN_FORM_REDUCED, NULL, &l) != O2_STATUS_OK) return 2;
    /* L = p²/2 + k u²/2 */
    if (o2_lagrangian_value(l, 0.5, 1.0, &value) != O2_STATUS_OK) return 3;
    if (fabs(value - 0.75) > 1e-10) return 4;
    if (o2_lagrangian_value(NULL, 0.0, 0.0, &value) != O2_STATUS_NULL_POINTER) return 5;
    if (strlen(o2_last_error_message()) == 0) return 6;

    o2_lagrangian_free(l);
    o2_nonlinearity_free(nl);
    printf("ok %s\n", o2_version());
    return 0;
}
