#include <stdio.h>

#define N 100

int v[N];
long acc[N];

int main(void)
{
    int i, k;
    long total = 0;

    for (i = 0; i < N; i++)
        v[i] = (i * 7) % 13;

    for (i = 0; i < N; i++)
        for (k = 0; k <= i; k++)
            acc[i] += v[k];

    for (i = 0; i < N; i++)
        total += acc[i] - v[i];

    printf("%ld\n", total);
    return 0;
}
