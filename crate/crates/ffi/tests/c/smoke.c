#include <stdio.h>
#include <string.h>
#include "reverting.h"

int main(void) {
    RvPmf *pmf = NULL;
    if (rv_clock_pmf(4, 0.0, &pmf) != RV_STATUS_OK) return 1;

    char buf[16];
    size_t needed = 0;
    if (rv_pmf_exact_prob(pmf, 2, buf, sizeof buf, &needed) != RV_STATUS_OK) return 2;
    if (strcmp(buf, "1/2") != 0) return 3;
    rv_pmf_free(pmf);

    if (rv_clock_pmf(0, 0.0, &pmf) != RV_STATUS_INVALID_ARGUMENT) return 4;
    if (strlen(rv_last_error()) == 0) return 5;

    double v = 0.0;
    if (rv_martingale_variance(100, &v) != RV_STATUS_OK || !(v > 0.0)) return 6;
    printf("ok %s %.6f\n", rv_version(), v);
    return 0;
}
