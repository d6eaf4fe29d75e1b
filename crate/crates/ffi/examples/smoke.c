/* Minimal C client: explains the running example and prints Sv(1). */
#include <stdio.h>
#include "xpaudit.h"

int main(void) {
    XpTable *table = NULL;
    XpProblem *problem = NULL;
    if (xp_table_parse("tt 4\n0110100000000000\n", &table) != XP_STATUS_OK) return 1;
    const uint8_t point[4] = {0, 0, 0, 0};
    if (xp_problem_from_point(table, point, 4, &problem) != XP_STATUS_OK) return 1;

    uint32_t axps[8];
    size_t n = 0;
    if (xp_problem_axps(problem, axps, 8, &n) != XP_STATUS_OK) return 1;
    int64_t num = 0, den = 0;
    if (xp_problem_shapley(problem, 1, &num, &den) != XP_STATUS_OK) return 1;
    uint8_t flags = 0;
    if (xp_problem_issues(problem, XP_REGISTRY_TABLE3_V1, &flags) != XP_STATUS_OK) return 1;
    printf("axps=%zu first=%u sv1=%lld/%lld flags=%u\n", n, axps[0], (long long)num,
           (long long)den, flags);

    XpProblem *bad = NULL;
    XpStatus status = xp_problem_from_row(table, 99, &bad);
    char message[128];
    xp_last_error(message, sizeof message);
    printf("row 99: status %d, %s\n", (int)status, message);

    xp_problem_free(problem);
    xp_table_free(table);
    return 0;
}
