/* A handful of vector kernels in the style of vectorizer test suites. */
#include <stdio.h>

#define LEN 3200
typedef float real_t;

real_t a[LEN], b[LEN], c[LEN], d[LEN];

void s000(void)
{
    for (int i = 0; i < LEN; i++)
        a[i] = b[i] + 1;
}

void s111(void)
{
    for (int i = 1; i < LEN; i += 2)
        a[i] = a[i - 1] + b[i];
}

void s1112(void)
{
    for (int i = LEN - 1; i >= 0; i--)
        a[i] = b[i] + (real_t)1.;
}

void s2244(void)
{
    for (int i = 0; i < LEN - 1; i++) {
        a[i + 1] = b[i] + c[i];
        a[i] = b[i] + d[i];
    }
}

real_t sum_a(void)
{
    real_t s = 0;
    for (int i = 0; i < LEN; i++)
        s += a[i];
    return s;
}

int main(void)
{
    for (int i = 0; i < LEN; i++) {
        b[i] = (real_t)(i % 9);
        c[i] = (real_t)(i % 5) * 0.5f;
        d[i] = 1.0f / (i + 1);
    }
    s000(); printf("%.3f\n", sum_a());
    s111(); printf("%.3f\n", sum_a());
    s1112(); printf("%.3f\n", sum_a());
    s2244(); printf("%.3f\n", sum_a());
    return 0;
}
