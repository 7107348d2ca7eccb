/* Floyd-Warshall all-pairs shortest paths on an int matrix. */
#include <stdio.h>

#define V 60
#define INF 1000000
#define MIN(a, b) ((a) < (b) ? (a) : (b))

int dist[V][V];

int main(void)
{
    int i, j, k;
    for (i = 0; i < V; i++)
        for (j = 0; j < V; j++)
            dist[i][j] = (i == j) ? 0 : ((i * 7 + j * 3) % 11 == 0 ? (i + j) % 9 + 1 : INF);
    for (k = 0; k < V; k++)
        for (i = 0; i < V; i++)
            for (j = 0; j < V; j++)
                dist[i][j] = MIN(dist[i][j], dist[i][k] + dist[k][j]);
    long sum = 0;
    int unreachable = 0;
    for (i = 0; i < V; i++)
        for (j = 0; j < V; j++) {
            if (dist[i][j] >= INF)
                unreachable++;
            else
                sum += dist[i][j];
        }
    printf("%ld %d\n", sum, unreachable);
    return 0;
}
