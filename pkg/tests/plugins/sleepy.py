import sys
import time

sys.stdin.buffer.read()
time.sleep(5)
print("0 0 1 1 0.5")
