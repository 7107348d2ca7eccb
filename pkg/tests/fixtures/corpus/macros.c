/* Function-like macros hiding array references; preprocessor lines inside and around nests. */
#include <stdio.h>

#define SIZE 300
#define IDX(r, c) ((r) * SIZE + (c))
#define ACC(k) (acc[(k) % 8] += table[k])
#define SQR(x) ((x) * (x))

double table[SIZE];

int main(void)
{
    static double mat[SIZE * SIZE];
    double acc[8] = {0};
    int i, j;
    for (i = 0; i < SIZE; i++)
        table[i] = SQR(i % 10) * 0.1;
    for (i = 0; i < SIZE; i++)
        ACC(i);
    for (i = 0; i < SIZE; i++)
        for (j = 0; j < SIZE; j++)
            mat[IDX(i, j)] = table[i] - table[j];
#ifdef VERBOSE
    for (i = 0; i < 8; i++)
        printf("acc[%d]=%f\n", i, acc[i]);
#endif
    for (i = 0; i < 8; i++) {
#if SIZE > 100
        acc[i] *= 2.0;
#endif
    }
    printf("%.3f %.3f %.3f\n", acc[0], acc[7], mat[IDX(SIZE - 1, 0)]);
    return 0;
}
