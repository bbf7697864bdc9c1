#include <stdio.h>
#include "latmax.h"
int main(void) {
    LatmaxOracle *f = NULL;
    LatmaxResult *r = NULL;
    double a[] = {3, 1}, p[] = {0.5, 1};
    uint64_t cap[] = {4, 4}, x[2];
    if (latmax_oracle_new_separable_concave(2, a, p, cap, &f) != LATMAX_STATUS_OK) return 1;
    latmax_solve_dr_cardinality(f, 5, 0.1, &r);
    latmax_result_solution(r, x, 2);
    printf("%llu %llu %f\n", (unsigned long long)x[0], (unsigned long long)x[1], latmax_result_value(r));
    latmax_result_free(r);
    latmax_oracle_free(f);
    return 0;
}
