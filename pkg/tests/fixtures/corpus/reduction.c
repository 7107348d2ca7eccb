/* Scalar reductions: sum, dot product, max, count. */
#include <stdio.h>

#define LEN 20000

float x[LEN], y[LEN];

int main(void)
{
    int i;
    double sum = 0.0, dot = 0.0;
    float maxv = -1.0f;
    long count = 0;

    for (i = 0; i < LEN; i++) {
        x[i] = (float)((i * 37) % 101) / 101.0f;
        y[i] = (float)((i * 13) % 53) / 53.0f;
    }
#pragma omp parallel for reduction(+:sum)
    for (i = 0; i < LEN; i++)
        sum += x[i];
#pragma omp parallel for reduction(+:dot) schedule(static)
    for (i = 0; i < LEN; i++)
        dot += (double)x[i] * y[i];
    for (i = 0; i < LEN; i++)
        if (x[i] > maxv)
            maxv = x[i];
    for (i = 0; i < LEN; i++) {
        if (y[i] < 0.5f)
            continue;
        count++;
    }
    printf("sum=%.4f dot=%.4f max=%.4f count=%ld i=%d\n", sum, dot, maxv, count, i);
    return 0;
}
