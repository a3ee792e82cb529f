int clamp(int x, int lo, int hi);

int main(void) {
  if (clamp(5, 0, 10) != 5) return 1;
  if (clamp(-3, 0, 10) != 0) return 2;
  if (clamp(42, 0, 10) != 10) return 3;
  if (clamp(10, 0, 10) != 10) return 4;
  return 0;
}
