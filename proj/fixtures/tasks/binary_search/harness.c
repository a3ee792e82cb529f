int binary_search(const int *a, int n, int key);

int main(void) {
  int sorted[] = {-5, -1, 0, 4, 9, 15, 22};
  for (int i = 0; i < 7; i++) {
    if (binary_search(sorted, 7, sorted[i]) != i) return 1;
  }
  if (binary_search(sorted, 7, 3) != -1) return 2;
  if (binary_search(sorted, 7, 100) != -1) return 3;
  if (binary_search(sorted, 0, 4) != -1) return 4;
  return 0;
}
