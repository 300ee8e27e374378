import sys

sys.stdin.buffer.read()
print("not a detection line")
